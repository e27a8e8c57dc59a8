//! Deterministic Monte Carlo reductions.

use rayon::prelude::*;

/// Paths per work unit. Fixed, so chunk boundaries (and therefore every
/// floating-point sum) do not depend on the thread count.
pub const CHUNK: usize = 256;

/// Runs `f` over `0..m` in fixed chunks, in parallel, returning per-chunk
/// results in chunk order.
pub fn chunked<T, F>(m: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let chunks = m.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(m)))
        .collect()
}

/// Componentwise running mean and variance (Welford, merged by Chan's rule).
#[derive(Debug, Clone)]
pub struct VecStats {
    pub n: usize,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VecStats {
    pub fn new(len: usize) -> Self {
        VecStats {
            n: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    pub fn merge(&mut self, other: &VecStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.n += other.n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }

    /// Standard error of the mean, `std / sqrt(n)`.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.variance().iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Merges per-chunk statistics in order.
pub fn merge_all(len: usize, parts: Vec<VecStats>) -> VecStats {
    let mut total = VecStats::new(len);
    for p in &parts {
        total.merge(p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_equals_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let mut whole = VecStats::new(1);
        for &v in &data {
            whole.push(&[v]);
        }
        let parts = chunked(data.len(), |r| {
            let mut s = VecStats::new(1);
            for i in r {
                s.push(&[data[i]]);
            }
            s
        });
        let merged = merge_all(1, parts);
        assert_eq!(merged.n, 1000);
        assert!((merged.mean[0] - whole.mean[0]).abs() < 1e-14);
        assert!((merged.variance()[0] - whole.variance()[0]).abs() < 1e-12);
    }
}
