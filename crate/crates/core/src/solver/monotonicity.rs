//! Smallest constant in `2⟨φ, L^*φ⟩_{-q} + ∥A^*φ∥²_{HS(-q)} <= C ∥φ∥²_{-q}`
//! over the truncated basis.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::distributions::AdjointGalerkin;
use crate::error::{Error, Result};
use crate::flow::CoefficientModel;
use crate::hermite::series::sobolev_weight;
use crate::hermite::Basis;

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub model: String,
    pub q: f64,
    pub d: usize,
    /// Largest basis degree used.
    pub n_max: usize,
    pub c_star: f64,
    /// `(n_max, C*)` for every refinement level.
    pub history: Vec<(usize, f64)>,
    /// `|C*_last - C*_prev| / |C*_last|`, zero when both vanish.
    pub drift: f64,
    /// `C* > 0`: the inequality only holds with exponential growth allowance.
    pub admits_growth: bool,
}

fn weights(basis: &Basis, q: f64) -> Vec<f64> {
    basis
        .indices()
        .iter()
        .map(|k| sobolev_weight(k.total(), basis.d(), -q))
        .collect()
}

/// `C*` on one basis: the top eigenvalue of `G^{-1/2} S G^{-1/2}` with
/// `S = L^{*T} G + G L^* + Σ_α A_α^{*T} G_ext A_α^*`.
pub fn monotonicity_constant(galerkin: &AdjointGalerkin, q: f64) -> Result<f64> {
    let g = weights(&galerkin.basis, q);
    let g_ext = weights(&galerkin.basis_ext, q);
    let n = g.len();
    let gl = DMatrix::from_fn(n, n, |i, j| g[i] * galerkin.l_star[(i, j)]);
    let mut s = &gl + gl.transpose();
    for a in &galerkin.a_star_ext {
        let ga = DMatrix::from_fn(a.nrows(), n, |i, j| g_ext[i] * a[(i, j)]);
        s += a.transpose() * ga;
    }
    let inv_sqrt: Vec<f64> = g.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut m = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * s[(i, j)] * inv_sqrt[j]);
    // symmetrize away rounding before the eigen-solve
    m = (&m + m.transpose()) * 0.5;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite entry in the quadratic form".into()));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigen-solver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `C*` at each degree in `levels` (ascending); the last one is reported.
pub fn check_monotonicity(model: &CoefficientModel, q: f64, levels: &[usize]) -> Result<MonotonicityReport> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("at least one basis degree is needed".into()));
    }
    let mut history = Vec::with_capacity(levels.len());
    for &n in levels {
        let basis = Basis::with_degree(model.d, n)?;
        let g = AdjointGalerkin::assemble(model, &basis)?;
        history.push((n, monotonicity_constant(&g, q)?));
    }
    let c_star = history.last().unwrap().1;
    let drift = match history.len() {
        1 => 0.0,
        len => {
            let prev = history[len - 2].1;
            let diff = (c_star - prev).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / c_star.abs().max(prev.abs())
            }
        }
    };
    // C* for a generator that vanishes is exactly zero; anything above
    // rounding is a genuine growth allowance
    let scale = history.iter().map(|h| h.1.abs()).fold(0.0, f64::max);
    Ok(MonotonicityReport {
        model: model.name.clone(),
        q,
        d: model.d,
        n_max: *levels.last().unwrap(),
        c_star,
        history,
        drift,
        admits_growth: c_star > 1e-12 * scale.max(1.0),
    })
}
