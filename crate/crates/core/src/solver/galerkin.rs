//! Deterministic integration of `dc/dt = L^* c` on the truncated basis.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::distributions::AdjointGalerkin;
use crate::error::{Error, Result};
use crate::hermite::HermiteSeries;

/// Largest tolerated one-step growth of `∥c∥` before the run is declared stiff.
pub const STIFF_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, Serialize)]
pub struct Checkpoint {
    pub step: usize,
    pub t: f64,
    pub series: HermiteSeries,
    /// `∥c(t) - c(0) - ∫_0^t L^* c ds∥_2`, the integral by composite Simpson.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GalerkinPath {
    pub dt: f64,
    pub n_steps: usize,
    pub checkpoints: Vec<Checkpoint>,
}

impl GalerkinPath {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("at least the initial checkpoint")
    }

    pub fn max_residual(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

fn rk4_step(l: &DMatrix<f64>, c: &DVector<f64>, dt: f64) -> DVector<f64> {
    let k1 = l * c;
    let k2 = l * (c + &k1 * (0.5 * dt));
    let k3 = l * (c + &k2 * (0.5 * dt));
    let k4 = l * (c + &k3 * dt);
    c + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Classical RK4 from `psi` to `t_final`, storing the state every `every`
/// steps and at the end.
pub fn solve_forward_galerkin(
    psi: &HermiteSeries,
    galerkin: &AdjointGalerkin,
    t_final: f64,
    dt: f64,
    every: usize,
) -> Result<GalerkinPath> {
    galerkin.basis.check_same(psi.basis())?;
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and T >= 0, got dt = {dt}, T = {t_final}"
        )));
    }
    let n_steps = (t_final / dt).round() as usize;
    let h = if n_steps == 0 { 0.0 } else { t_final / n_steps as f64 };
    let every = every.max(1);
    let l = &galerkin.l_star;
    let c0 = DVector::from_column_slice(psi.coeffs());
    let mut c = c0.clone();
    let mut lc_prev = l * &c;
    // Simpson sums over completed pairs of steps, plus the pending half pair.
    let mut integral_even = DVector::zeros(c.len());
    let mut pending: Option<(DVector<f64>, DVector<f64>)> = None;
    let checkpoint = |step: usize, c: &DVector<f64>, residual: f64| -> Result<Checkpoint> {
        Ok(Checkpoint {
            step,
            t: step as f64 * h,
            series: HermiteSeries::from_coeffs(&galerkin.basis, c.as_slice().to_vec())?,
            residual,
        })
    };
    let mut checkpoints = vec![checkpoint(0, &c, 0.0)?];
    for n in 1..=n_steps {
        let next = rk4_step(l, &c, h);
        let (before, after) = (c.norm(), next.norm());
        if !after.is_finite() || (before > 0.0 && after / before > STIFF_GROWTH) {
            return Err(Error::Stiff {
                time: n as f64 * h,
                growth: if before > 0.0 { after / before } else { f64::INFINITY },
            });
        }
        let lc = l * &next;
        let integral = match pending.take() {
            None => {
                pending = Some((lc_prev.clone(), lc.clone()));
                // trapezoid on the open half pair
                &integral_even + (&lc_prev + &lc) * (0.5 * h)
            }
            Some((f0, f1)) => {
                integral_even += (f0 + f1 * 4.0 + &lc) * (h / 3.0);
                integral_even.clone()
            }
        };
        c = next;
        lc_prev = lc;
        if n % every == 0 || n == n_steps {
            let residual = (&c - &c0 - integral).norm();
            checkpoints.push(checkpoint(n, &c, residual)?);
        }
    }
    Ok(GalerkinPath {
        dt: h,
        n_steps,
        checkpoints,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StepLadder {
    pub dts: Vec<f64>,
    /// `∥c_{dt}(T) - c_{dt/2}(T)∥_2` for successive pairs.
    pub differences: Vec<f64>,
    /// Observed order `log2` of successive difference ratios.
    pub orders: Vec<f64>,
    pub contracting: bool,
}

/// Runs the integrator at `dt, dt/2, ..., dt/2^(levels-1)` and reports how
/// the terminal states approach each other.
pub fn step_ladder(
    psi: &HermiteSeries,
    galerkin: &AdjointGalerkin,
    t_final: f64,
    dt: f64,
    levels: usize,
) -> Result<StepLadder> {
    let mut dts = Vec::new();
    let mut finals: Vec<DVector<f64>> = Vec::new();
    for level in 0..levels.max(2) {
        let h = dt / f64::powi(2.0, level as i32);
        let run = solve_forward_galerkin(psi, galerkin, t_final, h, usize::MAX)?;
        dts.push(run.dt);
        finals.push(DVector::from_column_slice(run.last().series.coeffs()));
    }
    let differences: Vec<f64> = finals.windows(2).map(|w| (&w[0] - &w[1]).norm()).collect();
    let orders: Vec<f64> = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let contracting = differences.windows(2).all(|w| w[1] < w[0] || w[0] < 1e-14);
    Ok(StepLadder {
        dts,
        differences,
        orders,
        contracting,
    })
}
