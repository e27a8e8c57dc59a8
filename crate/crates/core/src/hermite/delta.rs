//! Coefficients and negative-order norms of `∂^γ δ_x`.
//!
//! Both norm routes return the squared norm `∥δ_x∥²_{-p}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use statrs::function::gamma::gamma;

use super::basis::Basis;
use super::functions::hermite_functions_into;
use super::series::HermiteSeries;
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::quadrature::AdaptiveQuadrature;

/// `⟨∂^γ δ_x, h_k⟩ = (-1)^{|γ|} (∂^γ h_k)(x)`.
pub fn delta_coeffs(x: &[f64], gamma: &MultiIndex, basis: &Basis) -> HermiteSeries {
    let sign = gamma.parity_sign();
    let mut values = basis.eval_all(x, gamma);
    if sign < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    HermiteSeries::from_coeffs(basis, values).expect("sized from basis")
}

/// Truncated series for `∥δ_x∥²_{-p}` plus an asymptotic estimate of the
/// omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaNormSeries {
    /// `sum_{n <= n_max} (2n + d)^{-2p} sum_{|k| = n} h_k(x)^2`.
    pub partial_sum: f64,
    /// Estimate of `sum_{n > n_max}`; infinite when `p <= d/4`.
    pub tail: f64,
    /// False when `|x|^2` is beyond the turning point of the last shell, where
    /// the tail estimate is not valid (`tail` is then reported as 0).
    pub tail_valid: bool,
}

impl DeltaNormSeries {
    /// Partial sum plus tail estimate.
    pub fn corrected(&self) -> f64 {
        self.partial_sum + self.tail
    }
}

/// Per-shell sums `G_n = sum_{|k| = n} h_k(x)^2` for `n = 0..=n_max`.
pub fn shell_sums(x: &[f64], n_max: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n_max + 1];
    let mut row = vec![0.0; n_max + 1];
    for (axis, &xi) in x.iter().enumerate() {
        hermite_functions_into(xi, &mut row);
        let sq: Vec<f64> = row.iter().map(|h| h * h).collect();
        if axis == 0 {
            acc = sq;
            continue;
        }
        // convolve grades across axes
        let mut next = vec![0.0; n_max + 1];
        for (a, &va) in acc.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            for (b, &vb) in sq[..=n_max - a].iter().enumerate() {
                next[a + b] += va * vb;
            }
        }
        acc = next;
    }
    acc
}

/// `∥δ_x∥²_{-p}` by the Hermite series truncated at total degree `n_max`.
///
/// The tail estimate replaces the omitted shells by the semiclassical density
/// of states of the harmonic oscillator: with `Λ = 2n + d`,
/// `G_n dn ≈ (c_d/2) (Λ - |x|^2)^{d/2-1} dΛ`, `c_d = d ω_d / (2π)^d`,
/// integrated from the shell boundary `Λ_0 = 2 n_max + 1 + d`.
pub fn delta_norm_series(x: &[f64], p: f64, n_max: usize) -> DeltaNormSeries {
    let d = x.len();
    let shells = shell_sums(x, n_max);
    let partial_sum = shells
        .iter()
        .enumerate()
        .map(|(n, g)| ((2 * n + d) as f64).powf(-2.0 * p) * g)
        .sum();
    let (tail, tail_valid) = weyl_tail(x, p, n_max);
    DeltaNormSeries {
        partial_sum,
        tail,
        tail_valid,
    }
}

fn weyl_tail(x: &[f64], p: f64, n_max: usize) -> (f64, bool) {
    let d = x.len() as f64;
    let half_d = 0.5 * d;
    if p <= d / 4.0 {
        return (f64::INFINITY, true);
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let lambda0 = (2 * n_max + 1) as f64 + d;
    if r2 >= lambda0 {
        return (0.0, false);
    }
    let omega = PI.powf(half_d) / gamma(half_d + 1.0);
    let c_d = 2.0 * omega * half_d / (2.0 * PI).powf(d);
    // expand (Λ - r²)^{d/2-1} binomially; finite for even d
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        let term = binom * (-r2).powi(j as i32) * lambda0.powf(half_d - 2.0 * p - jf) / (2.0 * p + jf - half_d);
        total += term;
        binom *= (half_d - 1.0 - jf) / (jf + 1.0);
        j += 1;
        if binom == 0.0 || term.abs() < 1e-18 * total.abs() || j > 500 {
            break;
        }
    }
    (0.5 * c_d * total, true)
}

/// Settings for the Mehler-integral route.
#[derive(Debug, Clone, Copy)]
pub struct MehlerQuadrature {
    pub abs_tol: f64,
    pub initial_panels: usize,
    pub max_depth: usize,
}

impl Default for MehlerQuadrature {
    fn default() -> Self {
        MehlerQuadrature {
            abs_tol: 1e-10,
            initial_panels: 4,
            max_depth: 50,
        }
    }
}

/// `∥δ_x∥²_{-p} = Γ(2p)^{-1} ∫_0^∞ t^{2p-1} g(t, x) dt` with Mehler's kernel on
/// the diagonal, `g = e^{-dt} π^{-d/2} (1 - e^{-4t})^{-d/2} e^{-tanh(t)|x|^2}`.
///
/// On `(0, 1]` the power singularity is removed by `s = t^{2p-d/2}`; on
/// `[1, ∞)` the exponential tail is mapped to a finite interval by
/// `v = e^{-dt}`, which leaves only a logarithmic endpoint singularity.
pub fn delta_norm_mehler(x: &[f64], p: f64, quad: &MehlerQuadrature) -> Result<f64> {
    let d = x.len() as f64;
    if d < 1.0 {
        return Err(Error::InvalidArgument("empty point".into()));
    }
    if p <= d / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "the Mehler integral diverges for p = {p} <= d/4 = {}",
            d / 4.0
        )));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let half_d = 0.5 * d;
    let pi_factor = PI.powf(-half_d);
    let one_minus = |t: f64| -(-4.0 * t).exp_m1();

    let exponent = 2.0 * p - half_d; // β + 1
    let head_integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let t = s.powf(1.0 / exponent);
        // t^{d/2} g(t) stays bounded as t -> 0
        let ratio = if t < 1e-300 { 0.25 } else { t / one_minus(t) };
        (-d * t).exp() * pi_factor * ratio.powf(half_d) * (-t.tanh() * r2).exp() / exponent
    };
    let tail_integrand = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let t = -v.ln() / d;
        t.powf(2.0 * p - 1.0) * pi_factor * one_minus(t).powf(-half_d) * (-t.tanh() * r2).exp() / d
    };

    let rule = AdaptiveQuadrature {
        abs_tol: 0.5 * quad.abs_tol,
        initial_panels: quad.initial_panels,
        max_depth: quad.max_depth,
    };
    let (head, _) = rule.integrate(head_integrand, 0.0, 1.0);
    let (tail, _) = rule.integrate(tail_integrand, 0.0, (-d).exp());
    let value = (head + tail) / gamma(2.0 * p);
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("Mehler integral at p={p}, x={x:?}")));
    }
    Ok(value)
}

/// One row of a norms comparison table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NormRow {
    pub x: Vec<f64>,
    pub p: f64,
    pub series_value: f64,
    /// `None` when the Mehler integral diverges (`p <= d/4`).
    pub mehler_value: Option<f64>,
    pub rel_diff: Option<f64>,
    pub divergent: bool,
}

/// Both routes at one `(x, p)`. Below the threshold only the partial sum is
/// reported and the row is flagged divergent.
pub fn norm_row(x: &[f64], p: f64, n_max: usize, quad: &MehlerQuadrature) -> Result<NormRow> {
    let series = delta_norm_series(x, p, n_max);
    if p <= x.len() as f64 / 4.0 {
        return Ok(NormRow {
            x: x.to_vec(),
            p,
            series_value: series.partial_sum,
            mehler_value: None,
            rel_diff: None,
            divergent: true,
        });
    }
    let series_value = series.corrected();
    let mehler = delta_norm_mehler(x, p, quad)?;
    Ok(NormRow {
        x: x.to_vec(),
        p,
        series_value,
        mehler_value: Some(mehler),
        rel_diff: Some((series_value - mehler).abs() / mehler),
        divergent: false,
    })
}

/// CSV with columns `x, p, series_value, mehler_value, rel_diff`;
/// coordinates of `x` are joined with `;`.
pub fn norms_csv(rows: &[NormRow]) -> String {
    let mut out = String::from("x,p,series_value,mehler_value,rel_diff\n");
    for r in rows {
        let x: Vec<String> = r.x.iter().map(|v| format!("{v}")).collect();
        let m = r.mehler_value.map_or("divergent".to_string(), |v| format!("{v:.12e}"));
        let rd = r.rel_diff.map_or("divergent".to_string(), |v| format!("{v:.3e}"));
        let _ = writeln!(out, "{},{},{:.12e},{},{}", x.join(";"), r.p, r.series_value, m, rd);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::ops::{apply_derivative, hermite_eval, reconstruct, transform};
    use crate::hermite::series::sobolev_inner;

    fn idx(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn poly_gauss(x: f64) -> f64 {
        (1.0 - 0.5 * x + 0.3 * x * x - 0.2 * x.powi(3) + 0.1 * x.powi(4)) * (-x * x / 2.0).exp()
    }

    #[test]
    fn delta_coefficients_at_origin() {
        let basis = Basis::with_degree(1, 6).unwrap();
        let c = delta_coeffs(&[0.0], &idx(&[0]), &basis);
        assert!((c.coeffs()[0] - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(c.coeffs()[1], 0.0);
        let c1 = delta_coeffs(&[0.0], &idx(&[1]), &basis);
        assert!(c1.coeffs()[0].abs() < 1e-16);
    }

    #[test]
    fn delta_pairs_to_point_evaluation() {
        let basis = Basis::with_degree(1, 64).unwrap();
        let phi = transform(&basis, |x| poly_gauss(x[0])).unwrap();
        for &x in &[-1.2, 0.0, 0.7] {
            let delta = delta_coeffs(&[x], &idx(&[0]), &basis);
            let v = sobolev_inner(&delta, &phi, 0.0).unwrap();
            assert!((v - poly_gauss(x)).abs() < 1e-6);
            // ⟨∂δ_x, φ⟩ = -φ'(x)
            let dd = apply_derivative(&delta, 0);
            let h = 1e-5;
            let fd = (poly_gauss(x + h) - poly_gauss(x - h)) / (2.0 * h);
            let v = sobolev_inner(&dd, &phi, 0.0).unwrap();
            assert!((v + fd).abs() < 1e-6, "x={x}: {v} vs {}", -fd);
        }
    }

    #[test]
    fn derivative_of_reconstruction_matches_ladder() {
        let basis = Basis::with_degree(1, 10).unwrap();
        let f = transform(&basis, |x| {
            hermite_eval(&idx(&[3]), x, &idx(&[0])) + 0.5 * hermite_eval(&idx(&[6]), x, &idx(&[0]))
        })
        .unwrap();
        let df = apply_derivative(&f, 0);
        let x = 0.4;
        let direct = reconstruct(&f, &[x], &idx(&[1]));
        assert!((reconstruct(&df, &[x], &idx(&[0])) - direct).abs() < 1e-12);
    }

    #[test]
    fn series_agrees_with_mehler_in_one_dimension() {
        let quad = MehlerQuadrature::default();
        let m = delta_norm_mehler(&[0.0], 1.0, &quad).unwrap();
        let s = delta_norm_series(&[0.0], 1.0, 512);
        assert!((s.partial_sum - m).abs() / m < 1e-3);
        assert!((s.corrected() - m).abs() / m < 1e-5);
    }

    #[test]
    fn mehler_rejects_subcritical_order() {
        assert!(delta_norm_mehler(&[0.0, 0.0], 0.5, &MehlerQuadrature::default()).is_err());
        assert!(delta_norm_mehler(&[0.0], 0.2, &MehlerQuadrature::default()).is_err());
    }

    #[test]
    fn mehler_decays_in_x() {
        let quad = MehlerQuadrature::default();
        let v: Vec<f64> = [0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&x| delta_norm_mehler(&[x], 1.0, &quad).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn shell_sums_match_explicit_enumeration() {
        let basis = Basis::with_degree(2, 5).unwrap();
        let x = [0.3, -1.1];
        let g = shell_sums(&x, 5);
        let mut direct = [0.0; 6];
        for k in basis.indices() {
            direct[k.total()] += hermite_eval(k, &x, &MultiIndex::zero(2)).powi(2);
        }
        for n in 0..6 {
            assert!((g[n] - direct[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn divergent_tail_is_infinite() {
        let s = delta_norm_series(&[0.0], 0.2, 64);
        assert!(s.tail.is_infinite());
    }

    #[test]
    fn csv_has_expected_header() {
        let rows = vec![NormRow {
            x: vec![0.0],
            p: 0.2,
            series_value: 1.0,
            mehler_value: None,
            rel_diff: None,
            divergent: true,
        }];
        let csv = norms_csv(&rows);
        assert!(csv.starts_with("x,p,series_value,mehler_value,rel_diff\n0,0.2,"));
        assert!(csv.contains("divergent"));
    }
}
