//! Pathwise check of `⟨Y_t(ψ), φ⟩ = ⟨ψ, φ ∘ X_t⟩` against finite differences
//! of `x ↦ φ(X(t, x, ω))`.

use serde::Serialize;

use super::compact::{CompactDistribution, PolyGaussian};
use super::pushforward::pushforward;
use crate::error::{Error, Result};
use crate::flow::{simulate_flow, BrownianDriver, CoefficientModel, FlowOptions, Record};
use crate::hermite::{transform, Basis};
use crate::multi_index::MultiIndex;

#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub t: f64,
    pub fd_step: f64,
    /// `|⟨Y_t(ψ), φ⟩ - ⟨ψ, φ ∘ X_t⟩|` per path.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central difference stencil for `∂^γ`: offsets in units of `h` and weights.
fn stencil(gamma: &MultiIndex, h: f64) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &m in gamma.entries() {
        let axis: Vec<(f64, f64)> = (0..=m)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                (
                    (m as f64 / 2.0 - j as f64) * h,
                    sign * binomial(m, j) / h.powi(m as i32),
                )
            })
            .collect();
        out = out
            .into_iter()
            .flat_map(|(off, w)| {
                axis.iter().map(move |&(o, a)| {
                    let mut next = off.clone();
                    next.push(o);
                    (next, w * a)
                })
            })
            .collect();
    }
    out
}

/// Runs the check on `paths` paths of `driver`. `psi` must consist of atoms;
/// `basis` must resolve `φ` (for `scale = 1` any degree above that of the
/// polynomial is exact).
pub fn duality_check(
    psi: &CompactDistribution,
    model: &CoefficientModel,
    driver: &BrownianDriver,
    paths: usize,
    phi: &PolyGaussian,
    basis: &Basis,
    fd_step: f64,
) -> Result<DualityReport> {
    if !psi.densities.is_empty() {
        return Err(Error::InvalidArgument(
            "the finite-difference oracle needs an atomic distribution".into(),
        ));
    }
    let phi_series = transform(basis, |x| phi.eval(x))?;
    let order = FlowOptions {
        order: psi.order,
        track_inverse: false,
        record: Record::Final,
    };
    let plain = FlowOptions { order: 0, ..order };
    // every perturbed start of every atom, flattened
    let mut fd_starts = Vec::new();
    let mut fd_weights = Vec::new();
    let mut counts = Vec::new();
    for atom in &psi.atoms {
        let s = stencil(&atom.gamma, fd_step);
        counts.push(s.len());
        for (off, w) in s {
            fd_starts.push(atom.x.iter().zip(&off).map(|(a, b)| a + b).collect::<Vec<f64>>());
            fd_weights.push(w);
        }
    }
    let mut errors = Vec::with_capacity(paths);
    for m in 0..paths as u64 {
        let ens = simulate_flow(model, &psi.start_points(), driver, m, &order)?;
        let y = pushforward(psi, &ens.last().points, basis)?;
        let lhs: f64 = y.coeffs().iter().zip(phi_series.coeffs()).map(|(a, b)| a * b).sum();
        let moved = simulate_flow(model, &fd_starts, driver, m, &plain)?;
        let mut rhs = 0.0;
        let mut cursor = 0;
        for (atom, &n) in psi.atoms.iter().zip(&counts) {
            let deriv: f64 = (cursor..cursor + n)
                .map(|i| fd_weights[i] * phi.eval(&moved.last().points[i].x))
                .sum();
            rhs += atom.c * atom.gamma.parity_sign() * deriv;
            cursor += n;
        }
        errors.push((lhs - rhs).abs());
    }
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(DualityReport {
        t: driver.horizon(),
        fd_step,
        errors,
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_differentiate_polynomials() {
        let f = |x: &[f64]| x[0].powi(3) * x[1] + x[1].powi(2);
        let x = [0.4, -0.7];
        let apply = |g: &MultiIndex| -> f64 {
            stencil(g, 1e-3)
                .iter()
                .map(|(o, w)| w * f(&[x[0] + o[0], x[1] + o[1]]))
                .sum()
        };
        assert!((apply(&MultiIndex::new(vec![1, 0])) - 3.0 * 0.16 * -0.7).abs() < 1e-6);
        assert!((apply(&MultiIndex::new(vec![2, 1])) - 6.0 * 0.4).abs() < 1e-4);
        assert!((apply(&MultiIndex::new(vec![0, 2])) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_delta_under_ou() {
        let psi = CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![1]), &[0.3]);
        let phi = PolyGaussian {
            d: 1,
            terms: vec![(1.0, vec![0]), (0.5, vec![1]), (-0.2, vec![2]), (0.1, vec![4])],
            scale: 1.0,
        };
        let basis = Basis::with_degree(1, 24).unwrap();
        let drv = BrownianDriver::new(1, 6, 0.01, 50);
        let rep = duality_check(&psi, &CoefficientModel::ou(1, 1.0, 1.0), &drv, 4, &phi, &basis, 1e-4).unwrap();
        assert!(rep.max_error < 1e-6, "{:?}", rep.errors);
    }
}
