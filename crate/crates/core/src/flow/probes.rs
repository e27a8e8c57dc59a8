//! Diagnostics on simulated flows.

use std::fmt::Write as _;

use serde::Serialize;

use super::driver::BrownianDriver;
use super::model::CoefficientModel;
use super::simulate::{simulate_flow, FlowEnsemble, FlowOptions, Record};
use crate::error::Result;
use crate::multi_index::MultiIndex;
use crate::stats::{chunked, merge_all, VecStats};

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub t_steps: usize,
    pub s_steps: usize,
    /// `X(t + s, x, ω)`.
    pub direct: Vec<f64>,
    /// `X(s, X(t, x, ω), θ_t ω)`.
    pub composed: Vec<f64>,
    pub discrepancy: f64,
}

/// Compares `X(t+s, x, ω)` with `X(s, X(t, x, ω), θ_t ω)` on one path.
/// Times are given in scheme steps of `driver`.
pub fn flow_composition_check(
    model: &CoefficientModel,
    x: &[f64],
    t_steps: usize,
    s_steps: usize,
    driver: &BrownianDriver,
    path: u64,
) -> Result<CompositionReport> {
    let opts = FlowOptions {
        order: 0,
        track_inverse: false,
        record: Record::Final,
    };
    let start = vec![x.to_vec()];
    let direct = simulate_flow(model, &start, &driver.truncated(t_steps + s_steps), path, &opts)?
        .last()
        .points[0]
        .x
        .clone();
    let mid = simulate_flow(model, &start, &driver.truncated(t_steps), path, &opts)?
        .last()
        .points[0]
        .x
        .clone();
    let composed = simulate_flow(model, &[mid], &driver.shift(t_steps).truncated(s_steps), path, &opts)?
        .last()
        .points[0]
        .x
        .clone();
    let discrepancy = direct
        .iter()
        .zip(&composed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CompositionReport {
        t_steps,
        s_steps,
        direct,
        composed,
        discrepancy,
    })
}

/// `max_{n, i, j} |(J ∂X - I)_{ij}|` along one simulated path.
pub fn inverse_jacobian_deviation(ens: &FlowEnsemble) -> f64 {
    let mut worst: f64 = 0.0;
    for snap in &ens.snapshots {
        for p in &snap.points {
            if let (Some(j), Some(dx)) = (p.inverse_jacobian(), p.jacobian()) {
                let prod = j * dx;
                for i in 0..prod.nrows() {
                    for k in 0..prod.ncols() {
                        let target = if i == k { 1.0 } else { 0.0 };
                        worst = worst.max((prod[(i, k)] - target).abs());
                    }
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Monte Carlo estimate of `E sup_{x ∈ grid} |∂^α X(T, x)|^q` at the driver's
/// horizon (Euclidean norm over components when `d > 1`).
pub fn moment_probe(
    model: &CoefficientModel,
    grid: &[Vec<f64>],
    alpha: &MultiIndex,
    q: f64,
    driver: &BrownianDriver,
    paths: usize,
) -> Result<MomentEstimate> {
    let opts = FlowOptions {
        order: alpha.total(),
        track_inverse: false,
        record: Record::Final,
    };
    let parts = chunked(paths, |range| -> Result<VecStats> {
        let mut stats = VecStats::new(1);
        for m in range {
            let ens = simulate_flow(model, grid, driver, m as u64, &opts)?;
            let sup = ens
                .last()
                .points
                .iter()
                .map(|p| {
                    (0..model.d)
                        .map(|i| p.derivative(i, alpha).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        .powf(q)
                })
                .fold(0.0, f64::max);
            stats.push(&[sup]);
        }
        Ok(stats)
    });
    let stats = merge_all(1, parts.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(MomentEstimate {
        mean: stats.mean[0],
        std_error: stats.std_error()[0],
        paths,
    })
}

/// Trajectory dump: `path, step, t, X..., ∂X (row-major), J (row-major)`.
/// Missing tensors are written as empty fields.
pub fn trajectory_csv(ens: &FlowEnsemble, d: usize) -> String {
    let mut out = String::from("path,point,step,t");
    for i in 0..d {
        let _ = write!(out, ",x{i}");
    }
    for i in 0..d {
        for j in 0..d {
            let _ = write!(out, ",dx{i}{j}");
        }
    }
    for i in 0..d {
        for j in 0..d {
            let _ = write!(out, ",j{i}{j}");
        }
    }
    out.push('\n');
    for snap in &ens.snapshots {
        for (pi, p) in snap.points.iter().enumerate() {
            let _ = write!(out, "{},{},{},{}", ens.path, pi, snap.step, snap.t);
            for v in &p.x {
                let _ = write!(out, ",{v}");
            }
            match p.jacobian() {
                Some(m) => {
                    for i in 0..d {
                        for j in 0..d {
                            let _ = write!(out, ",{}", m[(i, j)]);
                        }
                    }
                }
                None => out.push_str(&",".repeat(d * d)),
            }
            match &p.jinv {
                Some(j) => {
                    for v in j {
                        let _ = write!(out, ",{v}");
                    }
                }
                None => out.push_str(&",".repeat(d * d)),
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_is_exact_on_the_grid() {
        let drv = BrownianDriver::new(1, 21, 1e-3, 1000);
        for model in [CoefficientModel::brownian(1), CoefficientModel::ou(1, 1.0, 1.0)] {
            let rep = flow_composition_check(&model, &[0.2], 500, 500, &drv, 3).unwrap();
            assert!(rep.discrepancy <= 1e-12, "{}", rep.discrepancy);
            let rep = flow_composition_check(&model, &[0.2], 500, 0, &drv, 3).unwrap();
            assert_eq!(rep.discrepancy, 0.0);
        }
    }

    #[test]
    fn brownian_moment_is_one() {
        let drv = BrownianDriver::new(1, 1, 0.1, 10);
        let grid = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let est = moment_probe(
            &CoefficientModel::brownian(1),
            &grid,
            &MultiIndex::new(vec![1]),
            3.0,
            &drv,
            20,
        )
        .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn csv_shape() {
        let drv = BrownianDriver::new(1, 1, 0.1, 3);
        let opts = FlowOptions {
            order: 1,
            track_inverse: true,
            record: Record::All,
        };
        let ens = simulate_flow(&CoefficientModel::ou(1, 1.0, 1.0), &[vec![0.0]], &drv, 0, &opts).unwrap();
        let csv = trajectory_csv(&ens, 1);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "path,point,step,t,x0,dx00,j00");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,0,0,0,0,1,1");
    }
}
