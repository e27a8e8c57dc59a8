//! The adjoint flow `Y_t(ψ) = X_t^*(ψ)`: `⟨Y_t(ψ), φ⟩ = ⟨ψ, φ ∘ X_t⟩`.

use super::chain_rule::faa_di_bruno;
use super::compact::CompactDistribution;
use crate::error::{Error, Result};
use crate::flow::PointState;
use crate::hermite::{Basis, HermiteSeries};
use crate::multi_index::MultiIndex;

fn check_points(psi: &CompactDistribution, points: &[PointState]) -> Result<()> {
    let expected = psi.start_points().len();
    if points.len() != expected {
        return Err(Error::MissingData(format!(
            "flow has {} points, distribution needs {expected}",
            points.len()
        )));
    }
    Ok(())
}

fn expansion_for(gamma0: &MultiIndex, state: &PointState, d: usize) -> Result<Vec<(MultiIndex, f64)>> {
    if gamma0.is_zero() {
        return Ok(vec![(MultiIndex::zero(d), 1.0)]);
    }
    let order = state.jets.first().map_or(0, |j| j.layout().order());
    if order < gamma0.total() {
        return Err(Error::MissingData(format!(
            "flow derivatives of order {order} cannot push forward ∂^{gamma0}"
        )));
    }
    Ok(faa_di_bruno(gamma0, d, |i, beta| Some(state.derivative(i, beta)))?.terms)
}

/// Hermite coefficients of `Y_t(ψ)(ω)` from the flow state at time `t`.
///
/// `points` must be the flow from [`CompactDistribution::start_points`], in
/// that order. For a weight `c` at `x` with derivative index `γ0`, the
/// contribution is `c (-1)^{|γ0|} Σ_γ e_γ ⟨∂^γ δ_{X(t,x)}, h_k⟩`.
pub fn pushforward(psi: &CompactDistribution, points: &[PointState], basis: &Basis) -> Result<HermiteSeries> {
    check_points(psi, points)?;
    let d = psi.d;
    let mut out = vec![0.0; basis.len()];
    let mut scratch = vec![0.0; basis.len()];
    for (state, (w, gamma0)) in points.iter().zip(psi.weighted_points()) {
        if w == 0.0 {
            continue;
        }
        let terms = expansion_for(gamma0, state, d)?;
        let max_order = terms.iter().map(|(g, _)| g.total()).max().unwrap_or(0);
        let tables = basis.point_tables(&state.x, max_order);
        let sign = gamma0.parity_sign();
        for (gamma, e) in &terms {
            // ⟨∂^γ δ_X, h_k⟩ = (-1)^{|γ|} ∂^γ h_k(X)
            let f = w * sign * e * gamma.parity_sign();
            if f == 0.0 {
                continue;
            }
            basis.eval_from_tables(&tables, gamma, &mut scratch);
            for (o, s) in out.iter_mut().zip(&scratch) {
                *o += f * s;
            }
        }
    }
    HermiteSeries::from_coeffs(basis, out)
}

/// `⟨Y_t(ψ), φ⟩` without a basis, where `phi(x, γ) = ∂^γ φ(x)`.
pub fn pushforward_pairing<F: Fn(&[f64], &MultiIndex) -> f64>(
    psi: &CompactDistribution,
    points: &[PointState],
    phi: F,
) -> Result<f64> {
    check_points(psi, points)?;
    let mut total = 0.0;
    for (state, (w, gamma0)) in points.iter().zip(psi.weighted_points()) {
        let terms = expansion_for(gamma0, state, psi.d)?;
        let sign = gamma0.parity_sign();
        for (gamma, e) in &terms {
            total += w * sign * e * gamma.parity_sign() * phi(&state.x, gamma);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{simulate_flow, BrownianDriver, CoefficientModel, FlowOptions, Record};
    use crate::hermite::{delta_coeffs, hermite_eval};

    #[test]
    fn delta_is_carried_to_the_flow_point() {
        let basis = Basis::with_degree(1, 12).unwrap();
        let psi = CompactDistribution::delta(&[0.4]);
        let drv = BrownianDriver::new(1, 5, 0.01, 50);
        let opts = FlowOptions {
            order: 0,
            ..Default::default()
        };
        let ens = simulate_flow(&CoefficientModel::ou(1, 1.0, 1.0), &psi.start_points(), &drv, 0, &opts).unwrap();
        let y = pushforward(&psi, &ens.last().points, &basis).unwrap();
        let expected = delta_coeffs(&ens.last().points[0].x, &MultiIndex::zero(1), &basis);
        assert_eq!(y.coeffs(), expected.coeffs());
    }

    #[test]
    fn time_zero_returns_psi() {
        let basis = Basis::with_degree(2, 6).unwrap();
        let psi = CompactDistribution::derivative_delta(1.5, &MultiIndex::new(vec![1, 1]), &[0.2, -0.3])
            .combine(
                1.0,
                &CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![0, 2]), &[0.0, 0.5]),
                2.0,
            )
            .unwrap();
        let drv = BrownianDriver::new(2, 5, 0.01, 3);
        let opts = FlowOptions {
            order: 2,
            track_inverse: false,
            record: Record::All,
        };
        let ens = simulate_flow(&CoefficientModel::ou(2, 1.0, 1.0), &psi.start_points(), &drv, 0, &opts).unwrap();
        let y0 = pushforward(&psi, &ens.snapshots[0].points, &basis).unwrap();
        let direct = psi.to_series(&basis);
        for (a, b) in y0.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn measure_reduces_to_point_masses() {
        let basis = Basis::with_degree(1, 8).unwrap();
        let psi = CompactDistribution::delta(&[-0.5])
            .combine(0.25, &CompactDistribution::delta(&[0.5]), 0.75)
            .unwrap();
        let drv = BrownianDriver::new(1, 8, 0.01, 20);
        let opts = FlowOptions {
            order: 0,
            ..Default::default()
        };
        let ens = simulate_flow(&CoefficientModel::ou(1, 1.0, 1.0), &psi.start_points(), &drv, 1, &opts).unwrap();
        let pts = &ens.last().points;
        let y = pushforward(&psi, pts, &basis).unwrap();
        for (i, k) in basis.indices().iter().enumerate() {
            let z = MultiIndex::zero(1);
            let expected = 0.25 * hermite_eval(k, &pts[0].x, &z) + 0.75 * hermite_eval(k, &pts[1].x, &z);
            assert!((y.coeffs()[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_atoms_need_flow_derivatives() {
        let basis = Basis::with_degree(1, 4).unwrap();
        let psi = CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![2]), &[0.0]);
        let drv = BrownianDriver::new(1, 8, 0.01, 2);
        let opts = FlowOptions {
            order: 1,
            ..Default::default()
        };
        let ens = simulate_flow(&CoefficientModel::brownian(1), &psi.start_points(), &drv, 0, &opts).unwrap();
        assert!(pushforward(&psi, &ens.last().points, &basis).is_err());
    }
}
