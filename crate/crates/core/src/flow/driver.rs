use serde::Serialize;

use crate::rng::NormalStream;

/// One Brownian path per index, on a uniform grid.
///
/// The fine increment of component `α` at fine step `j` of path `m` is
/// `sqrt(dt) Z(seed, m, j r + α)`. `offset` re-indexes time (the driver of the
/// shifted path `θ_s ω`) and `stride` sums consecutive fine increments, so a
/// coarse driver sees exactly the same `ω` as the fine one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianDriver {
    pub r: usize,
    pub seed: u64,
    /// Fine step.
    pub dt: f64,
    /// Number of (possibly coarsened) steps.
    pub n_steps: usize,
    pub offset: usize,
    pub stride: usize,
}

impl BrownianDriver {
    pub fn new(r: usize, seed: u64, dt: f64, n_steps: usize) -> Self {
        BrownianDriver {
            r,
            seed,
            dt,
            n_steps,
            offset: 0,
            stride: 1,
        }
    }

    /// Driver on `[0, horizon]` with `round(horizon / dt)` steps.
    pub fn for_horizon(r: usize, seed: u64, dt: f64, horizon: f64) -> Self {
        let n = (horizon / dt).round() as usize;
        BrownianDriver::new(r, seed, dt, n)
    }

    /// Step actually taken by the scheme.
    pub fn step(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn horizon(&self) -> f64 {
        self.step() * self.n_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.step() * n as f64
    }

    /// Driver of `θ_s ω` with `s = steps · step()`, over the remaining steps.
    pub fn shift(&self, steps: usize) -> Self {
        BrownianDriver {
            offset: self.offset + steps * self.stride,
            n_steps: self.n_steps.saturating_sub(steps),
            ..self.clone()
        }
    }

    /// Same path, `factor` fine steps per scheme step.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        BrownianDriver {
            stride: self.stride * factor,
            n_steps: self.n_steps / factor,
            ..self.clone()
        }
    }

    /// Same path, truncated to the first `n` steps.
    pub fn truncated(&self, n: usize) -> Self {
        BrownianDriver {
            n_steps: n.min(self.n_steps),
            ..self.clone()
        }
    }

    /// All increments of path `path`, `n_steps × r`, row-major.
    pub fn increments(&self, path: u64) -> Vec<f64> {
        let r = self.r;
        let mut stream = NormalStream::new(self.seed, path, (self.offset * r) as u64);
        let sq = self.dt.sqrt();
        let mut out = vec![0.0; self.n_steps * r];
        let mut fine = vec![0.0; r];
        for n in 0..self.n_steps {
            let row = &mut out[n * r..(n + 1) * r];
            for _ in 0..self.stride {
                stream.fill(&mut fine);
                for (o, z) in row.iter_mut().zip(&fine) {
                    *o += z;
                }
            }
            for o in row.iter_mut() {
                *o *= sq;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_reindexes_the_same_path() {
        let drv = BrownianDriver::new(2, 11, 0.01, 10);
        let all = drv.increments(5);
        let tail = drv.shift(4).increments(5);
        assert_eq!(tail.len(), 12);
        assert_eq!(&all[8..], &tail[..]);
    }

    #[test]
    fn coarse_increments_are_sums_of_fine_ones() {
        let drv = BrownianDriver::new(1, 3, 0.001, 12);
        let fine = drv.increments(0);
        let coarse = drv.coarsen(4).increments(0);
        assert_eq!(coarse.len(), 3);
        for (n, c) in coarse.iter().enumerate() {
            let s: f64 = fine[4 * n..4 * n + 4].iter().sum();
            assert!((c - s).abs() < 1e-15);
        }
        assert!((drv.coarsen(4).step() - 0.004).abs() < 1e-18);
    }
}
