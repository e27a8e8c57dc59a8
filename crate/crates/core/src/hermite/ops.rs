//! Operators on truncated Hermite coefficient vectors.
//!
//! Everything here is a compression to the target basis: coefficients raised
//! past `n_max` are dropped.

use nalgebra::DMatrix;

use super::basis::Basis;
use super::functions::hermite_functions_into;
use super::series::HermiteSeries;
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::quadrature::GaussHermite;

/// `(∂^γ h_k)(x)`.
pub fn hermite_eval(k: &MultiIndex, x: &[f64], gamma: &MultiIndex) -> f64 {
    k.entries()
        .iter()
        .zip(x)
        .zip(gamma.entries())
        .map(|((&ki, &xi), &gi)| super::functions::hermite_function_derivatives(ki, gi, xi)[ki])
        .product()
}

/// Visits every node of the `d`-fold tensor rule, passing the per-axis node
/// indices, the point and the function-form weight (product of `lambda_i`). Axis 0 varies slowest.
pub fn for_each_tensor_node<F: FnMut(&[usize], &[f64], f64)>(rule: &GaussHermite, d: usize, mut visit: F) {
    let n = rule.len();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for axis in 0..d {
            x[axis] = rule.nodes[idx[axis]];
            w *= rule.function_weights[idx[axis]];
        }
        visit(&idx, &x, w);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// The tensor quadrature points a sampled transform expects, in visiting order.
pub fn quadrature_points(basis: &Basis) -> Vec<Vec<f64>> {
    let rule = GaussHermite::cached(basis.spec().effective_nodes());
    let mut out = Vec::new();
    for_each_tensor_node(&rule, basis.d(), |_, x, _| out.push(x.to_vec()));
    out
}

/// Per-node 1D value tables `h_0..h_{n_max}` at each node of `rule`.
fn node_tables(rule: &GaussHermite, n_max: usize) -> Vec<Vec<f64>> {
    rule.nodes
        .iter()
        .map(|&t| {
            let mut row = vec![0.0; n_max + 1];
            hermite_functions_into(t, &mut row);
            row
        })
        .collect()
}

fn basis_values_at(basis: &Basis, x: &[f64], scratch: &mut [Vec<f64>], out: &mut [f64]) {
    for (axis, &xi) in x.iter().enumerate() {
        hermite_functions_into(xi, &mut scratch[axis]);
    }
    for (slot, k) in out.iter_mut().zip(basis.indices()) {
        *slot = k
            .entries()
            .iter()
            .enumerate()
            .map(|(axis, &ki)| scratch[axis][ki])
            .product();
    }
}

fn transform_values<I: Iterator<Item = f64>>(basis: &Basis, mut values: I) -> Result<HermiteSeries> {
    let rule = GaussHermite::cached(basis.spec().effective_nodes());
    let tables = node_tables(&rule, basis.n_max());
    let d = basis.d();
    let mut coeffs = vec![0.0; basis.len()];
    let mut failure = None;
    for_each_tensor_node(&rule, d, |node, x, w| {
        if failure.is_some() {
            return;
        }
        let v = match values.next() {
            Some(v) => v,
            None => {
                failure = Some(Error::MissingData("too few samples for the quadrature grid".into()));
                return;
            }
        };
        if !v.is_finite() {
            failure = Some(Error::NonFinite(format!("sample {v} at {x:?}")));
            return;
        }
        if v == 0.0 {
            return;
        }
        let wv = w * v;
        for (c, k) in coeffs.iter_mut().zip(basis.indices()) {
            let mut prod = wv;
            for (axis, &ki) in k.entries().iter().enumerate() {
                prod *= tables[node[axis]][ki];
            }
            *c += prod;
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    HermiteSeries::from_coeffs(basis, coeffs)
}

/// Projects a callable `f` onto the basis: `c_k = ∫ f h_k dx` by tensor
/// Gauss-Hermite quadrature.
pub fn transform<F: Fn(&[f64]) -> f64>(basis: &Basis, f: F) -> Result<HermiteSeries> {
    let points = quadrature_points(basis);
    transform_values(basis, points.iter().map(|x| f(x)))
}

/// Same as [`transform`] for samples taken at [`quadrature_points`].
pub fn transform_samples(basis: &Basis, samples: &[f64]) -> Result<HermiteSeries> {
    let expected = basis.spec().effective_nodes().pow(basis.d() as u32);
    if samples.len() != expected {
        return Err(Error::MissingData(format!(
            "expected {expected} samples, got {}",
            samples.len()
        )));
    }
    transform_values(basis, samples.iter().copied())
}

/// `sum_k c_k (∂^γ h_k)(x)`.
pub fn reconstruct(f: &HermiteSeries, x: &[f64], gamma: &MultiIndex) -> f64 {
    let values = f.basis().eval_all(x, gamma);
    values.iter().zip(f.coeffs()).map(|(h, c)| h * c).sum()
}

/// `∂_axis f` via `h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}`.
pub fn apply_derivative(f: &HermiteSeries, axis: usize) -> HermiteSeries {
    ladder(f, axis, -1.0)
}

/// `x_axis f` via `t h_n = sqrt(n/2) h_{n-1} + sqrt((n+1)/2) h_{n+1}`.
pub fn multiply_by_coordinate(f: &HermiteSeries, axis: usize) -> HermiteSeries {
    ladder(f, axis, 1.0)
}

fn ladder(f: &HermiteSeries, axis: usize, up_sign: f64) -> HermiteSeries {
    let basis = f.basis();
    let mut out = HermiteSeries::zeros(basis);
    let coeffs = out.coeffs_mut();
    for (k, &c) in basis.indices().iter().zip(f.coeffs()) {
        if c == 0.0 {
            continue;
        }
        let n = k.get(axis) as f64;
        if let Some(down) = k.with_decremented(axis) {
            coeffs[basis.position(&down).unwrap()] += (n / 2.0).sqrt() * c;
        }
        if let Some(pos) = basis.position(&k.with_incremented(axis)) {
            coeffs[pos] += up_sign * ((n + 1.0) / 2.0).sqrt() * c;
        }
    }
    out
}

/// Matrix of the truncated ladder operator on `basis` (derivative when
/// `up_sign = -1`, coordinate multiplication when `+1`).
pub fn ladder_matrix(basis: &Basis, axis: usize, up_sign: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for (j, k) in basis.indices().iter().enumerate() {
        let n = k.get(axis) as f64;
        if let Some(down) = k.with_decremented(axis) {
            m[(basis.position(&down).unwrap(), j)] += (n / 2.0).sqrt();
        }
        if let Some(pos) = basis.position(&k.with_incremented(axis)) {
            m[(pos, j)] += up_sign * ((n + 1.0) / 2.0).sqrt();
        }
    }
    m
}

pub fn derivative_matrix(basis: &Basis, axis: usize) -> DMatrix<f64> {
    ladder_matrix(basis, axis, -1.0)
}

/// Galerkin matrix `M_{kj} = ∫ σ h_j h_k dx` with rows in `rows` and
/// columns in `cols`, using `nodes` Gauss-Hermite nodes per axis.
pub fn multiplication_matrix<F: Fn(&[f64]) -> f64>(
    rows: &Basis,
    cols: &Basis,
    sigma: F,
    nodes: usize,
) -> Result<DMatrix<f64>> {
    rows.spec().validate()?;
    if rows.d() != cols.d() {
        return Err(Error::BasisMismatch("row and column dimensions differ".into()));
    }
    let d = rows.d();
    let n_tab = rows.n_max().max(cols.n_max());
    let rule = GaussHermite::cached(
        nodes
            .max(rows.spec().effective_nodes())
            .max(cols.spec().effective_nodes()),
    );
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    let mut scratch = vec![vec![0.0; n_tab + 1]; d];
    let mut hr = vec![0.0; rows.len()];
    let mut hc = vec![0.0; cols.len()];
    let mut failure = None;
    for_each_tensor_node(&rule, d, |_, x, w| {
        let s = sigma(x);
        if !s.is_finite() {
            failure.get_or_insert_with(|| Error::NonFinite(format!("multiplier {s} at {x:?}")));
            return;
        }
        if s == 0.0 {
            return;
        }
        basis_values_at(rows, x, &mut scratch, &mut hr);
        basis_values_at(cols, x, &mut scratch, &mut hc);
        let ws = w * s;
        for (j, &cj) in hc.iter().enumerate() {
            let f = ws * cj;
            if f == 0.0 {
                continue;
            }
            let mut col = m.column_mut(j);
            for (k, &rk) in hr.iter().enumerate() {
                col[k] += f * rk;
            }
        }
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(m),
    }
}

/// Node count that integrates `h_j h_k σ` exactly when `σ` is a polynomial
/// of degree `poly_degree` (plus a margin for non-polynomial `σ`).
pub fn product_nodes(rows: &Basis, cols: &Basis, poly_degree: usize) -> usize {
    (rows.n_max() + cols.n_max() + poly_degree) / 2 + 1 + 8
}

/// Galerkin product `σ f` compressed to the basis of `f`.
pub fn multiply_by_function<F: Fn(&[f64]) -> f64>(f: &HermiteSeries, sigma: F) -> Result<HermiteSeries> {
    let basis = f.basis();
    let m = multiplication_matrix(basis, basis, sigma, basis.spec().effective_nodes())?;
    let v = &m * nalgebra::DVector::from_column_slice(f.coeffs());
    HermiteSeries::from_coeffs(basis, v.as_slice().to_vec())
}

/// One-dimensional translation matrix `T_{kj} = ∫ h_k(t) h_j(t - a) dt` for
/// `k <= n_rows`, `j <= n_cols`.
///
/// With `t = y + a/2` the integrand is a polynomial times `e^{-y^2 - a^2/4}`,
/// so a Gauss-Hermite rule in `y` with more than `(n_rows + n_cols)/2` nodes
/// is exact.
pub fn translation_matrix_1d(n_rows: usize, n_cols: usize, a: f64) -> DMatrix<f64> {
    let rule = GaussHermite::cached(n_rows.max(n_cols) + 1 + 32);
    let mut m = DMatrix::zeros(n_rows + 1, n_cols + 1);
    let mut plus = vec![0.0; n_rows + 1];
    let mut minus = vec![0.0; n_cols + 1];
    for (&y, &l) in rule.nodes.iter().zip(&rule.function_weights) {
        hermite_functions_into(y + 0.5 * a, &mut plus);
        hermite_functions_into(y - 0.5 * a, &mut minus);
        for j in 0..=n_cols {
            let f = l * minus[j];
            for k in 0..=n_rows {
                m[(k, j)] += f * plus[k];
            }
        }
    }
    m
}

/// Matrix of `f ↦ f(· - shift)` from `cols` into `rows`.
pub fn translation_matrix_between(rows: &Basis, cols: &Basis, shift: &[f64]) -> DMatrix<f64> {
    let per_axis: Vec<DMatrix<f64>> = shift
        .iter()
        .map(|&a| translation_matrix_1d(rows.n_max(), cols.n_max(), a))
        .collect();
    let (ri, ci) = (rows.indices(), cols.indices());
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        ri[r]
            .entries()
            .iter()
            .zip(ci[c].entries())
            .enumerate()
            .map(|(axis, (&kr, &kc))| per_axis[axis][(kr, kc)])
            .product()
    })
}

/// Matrix of `f ↦ f(· - shift)` on the truncated basis.
pub fn translation_matrix(basis: &Basis, shift: &[f64]) -> DMatrix<f64> {
    translation_matrix_between(basis, basis, shift)
}

/// Coefficients of `f(· - shift)`, compressed to the basis of `f`.
pub fn translate(f: &HermiteSeries, shift: &[f64]) -> HermiteSeries {
    if shift.iter().all(|&a| a == 0.0) {
        return f.clone();
    }
    let t = translation_matrix(f.basis(), shift);
    apply_matrix(&t, f)
}

/// Coefficients of `f(· - shift)` in `target`. Taking `f` in a wider basis
/// than `target` avoids losing the part of `f` above the target degree that
/// the shift moves down.
pub fn translate_into(f: &HermiteSeries, shift: &[f64], target: &Basis) -> HermiteSeries {
    let t = translation_matrix_between(target, f.basis(), shift);
    let v = t * nalgebra::DVector::from_column_slice(f.coeffs());
    HermiteSeries::from_coeffs(target, v.as_slice().to_vec()).expect("sized from target")
}

/// `m f` for a square matrix on the series' own basis.
pub fn apply_matrix(m: &DMatrix<f64>, f: &HermiteSeries) -> HermiteSeries {
    let v = m * nalgebra::DVector::from_column_slice(f.coeffs());
    HermiteSeries::from_coeffs(f.basis(), v.as_slice().to_vec()).expect("square operator")
}
