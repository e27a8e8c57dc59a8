//! Pathwise residual of `Y_t(ψ) = ψ + ∫ A^*(Y_s) dB_s + ∫ L^*(Y_s) ds`.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;

use super::compact::CompactDistribution;
use super::galerkin::AdjointGalerkin;
use super::pushforward::pushforward;
use crate::error::Result;
use crate::flow::{simulate_flow, BrownianDriver, CoefficientModel, FlowOptions, Record};
use crate::hermite::sobolev_norm;

#[derive(Debug, Clone, Serialize)]
pub struct ResidualPath {
    pub q: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max: f64,
}

/// Residual `R_n = ∥Y_{t_n} - ψ - Σ_{m<n} A^*(Y_{t_m}) ΔB_m - Σ_{m<n} L^*(Y_{t_m}) Δt∥_{-q}`
/// along one path, with left-point (Itô) sums on the flow's own increments.
pub fn spde_residual(
    psi: &CompactDistribution,
    model: &CoefficientModel,
    galerkin: &AdjointGalerkin,
    driver: &BrownianDriver,
    path: u64,
    q: f64,
) -> Result<ResidualPath> {
    let basis = &galerkin.basis;
    let opts = FlowOptions {
        order: psi.order,
        track_inverse: false,
        record: Record::All,
    };
    let increments = driver.increments(path);
    let ens = simulate_flow(model, &psi.start_points(), driver, path, &opts)?;
    let dt = driver.step();
    let r = model.r;
    let psi0 = DVector::from_column_slice(psi.to_series(basis).coeffs());
    let mut integral = DVector::zeros(basis.len());
    let mut times = Vec::with_capacity(ens.snapshots.len());
    let mut residuals = Vec::with_capacity(ens.snapshots.len());
    for (n, snap) in ens.snapshots.iter().enumerate() {
        let y = DVector::from_column_slice(pushforward(psi, &snap.points, basis)?.coeffs());
        let res = &y - &psi0 - &integral;
        let series = crate::hermite::HermiteSeries::from_coeffs(basis, res.as_slice().to_vec())?;
        times.push(snap.t);
        residuals.push(sobolev_norm(&series, -q));
        if n < driver.n_steps {
            for alpha in 0..r {
                integral += (&galerkin.a_star[alpha] * &y) * increments[n * r + alpha];
            }
            integral += (&galerkin.l_star * &y) * dt;
        }
    }
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ResidualPath {
        q,
        dt,
        times,
        residuals,
        max,
    })
}

/// CSV with columns `step, t, residual`.
pub fn residual_csv(path: &ResidualPath) -> String {
    let mut out = String::from("step,t,residual\n");
    for (n, (t, r)) in path.times.iter().zip(&path.residuals).enumerate() {
        let _ = writeln!(out, "{n},{t},{r:.12e}");
    }
    out
}
