//! Matrices of the adjoint operators
//! `A_α^* ψ = -Σ_k ∂_k(σ^k_α ψ)` and `L^* ψ = ½ Σ ∂²_{ij}(a_{ij} ψ) - Σ ∂_i(b^i ψ)`
//! on a truncated Hermite basis, with `a = σ σ^T`.
//!
//! Multiplications are projected onto a basis two degrees larger than the
//! target and differentiated there, so the truncated matrices are the exact
//! compressions `P_N A^* P_N` and `P_N L^* P_N` (and the transposes of the
//! forward Galerkin matrices).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flow::CoefficientModel;
use crate::hermite::functions::hermite_derivative_tables;
use crate::hermite::ops::{derivative_matrix, for_each_tensor_node, multiplication_matrix, product_nodes};
use crate::hermite::series::sobolev_weight;
use crate::hermite::{Basis, HermiteSeries};
use crate::quadrature::GaussHermite;

/// Margin added to the quadrature size when a coefficient is not a polynomial.
const NON_POLYNOMIAL_EXTRA_NODES: usize = 48;

#[derive(Debug, Clone)]
pub struct AdjointGalerkin {
    pub basis: Basis,
    /// Basis of degree `n_max + 1`, the exact range of `A^*` on constant-σ models.
    pub basis_ext: Basis,
    /// `A_α^*` compressed to `basis`, one per noise component.
    pub a_star: Vec<DMatrix<f64>>,
    /// `A_α^*` from `basis` into `basis_ext`.
    pub a_star_ext: Vec<DMatrix<f64>>,
    pub l_star: DMatrix<f64>,
}

/// Which adjoint operator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointOp {
    A(usize),
    L,
}

fn quadrature_size(model: &CoefficientModel, rows: &Basis, cols: &Basis) -> usize {
    let poly_degree = 2 * model.max_degree();
    let mut nodes = product_nodes(rows, cols, poly_degree);
    if model.sigma.iter().chain(&model.drift).any(|f| !f.waves.is_empty()) {
        nodes += NON_POLYNOMIAL_EXTRA_NODES;
    }
    nodes
}

fn leading_rows(m: &DMatrix<f64>, rows: usize) -> DMatrix<f64> {
    m.rows(0, rows).into_owned()
}

impl AdjointGalerkin {
    pub fn assemble(model: &CoefficientModel, basis: &Basis) -> Result<Self> {
        if model.d != basis.d() {
            return Err(Error::BasisMismatch(format!(
                "model dimension {} vs basis dimension {}",
                model.d,
                basis.d()
            )));
        }
        let (d, r) = (model.d, model.r);
        let ext1 = basis.resized(basis.n_max() + 1)?;
        let ext2 = basis.resized(basis.n_max() + 2)?;
        let nodes = quadrature_size(model, &ext2, basis);
        let deriv: Vec<DMatrix<f64>> = (0..d).map(|k| derivative_matrix(&ext2, k)).collect();
        let mult = |f: &dyn Fn(&[f64]) -> f64| multiplication_matrix(&ext2, basis, f, nodes);

        let mut a_star = Vec::with_capacity(r);
        let mut a_star_ext = Vec::with_capacity(r);
        for alpha in 0..r {
            let mut acc = DMatrix::zeros(ext2.len(), basis.len());
            for k in 0..d {
                let field = model.sigma_field(k, alpha);
                if field.is_zero() {
                    continue;
                }
                let m = mult(&|x| field.eval(x))?;
                acc -= &deriv[k] * m;
            }
            a_star_ext.push(leading_rows(&acc, ext1.len()));
            a_star.push(leading_rows(&acc, basis.len()));
        }

        let mut l = DMatrix::zeros(ext2.len(), basis.len());
        if !model.diffusion_is_zero() {
            for i in 0..d {
                for j in 0..d {
                    let m = mult(&|x| model.diffusion_at(x)[i * d + j])?;
                    l += 0.5 * &deriv[i] * (&deriv[j] * m);
                }
            }
        }
        for i in 0..d {
            if model.drift[i].is_zero() {
                continue;
            }
            let m = mult(&|x| model.drift[i].eval(x))?;
            l -= &deriv[i] * m;
        }
        Ok(AdjointGalerkin {
            basis: basis.clone(),
            basis_ext: ext1,
            a_star,
            a_star_ext,
            l_star: leading_rows(&l, basis.len()),
        })
    }

    pub fn matrix(&self, op: AdjointOp) -> &DMatrix<f64> {
        match op {
            AdjointOp::A(alpha) => &self.a_star[alpha],
            AdjointOp::L => &self.l_star,
        }
    }

    /// `A_α^* ψ` or `L^* ψ`, compressed to the basis.
    pub fn apply(&self, op: AdjointOp, psi: &HermiteSeries) -> Result<HermiteSeries> {
        self.basis.check_same(psi.basis())?;
        let v = self.matrix(op) * DVector::from_column_slice(psi.coeffs());
        HermiteSeries::from_coeffs(&self.basis, v.as_slice().to_vec())
    }

    /// `Σ_α ∥A_α^* ψ∥²_{-q}`, the squared Hilbert-Schmidt norm of `A^* ψ`,
    /// evaluated in the extended basis.
    pub fn hs_norm_a(&self, psi: &HermiteSeries, q: f64) -> Result<f64> {
        self.basis.check_same(psi.basis())?;
        let v = DVector::from_column_slice(psi.coeffs());
        let d = self.basis.d();
        let mut total = 0.0;
        for a in &self.a_star_ext {
            let w = a * &v;
            total += self
                .basis_ext
                .indices()
                .iter()
                .zip(w.iter())
                .map(|(k, c)| sobolev_weight(k.total(), d, -q) * c * c)
                .sum::<f64>();
        }
        Ok(total)
    }
}

/// `adjoint_apply` in free-function form.
pub fn adjoint_apply(galerkin: &AdjointGalerkin, op: AdjointOp, psi: &HermiteSeries) -> Result<HermiteSeries> {
    galerkin.apply(op, psi)
}

/// Forward Galerkin matrices `⟨h_k, A_α h_j⟩` and `⟨h_k, L h_j⟩`, computed by
/// pointwise quadrature of `A_α h_j = Σ_k σ^k_α ∂_k h_j` and
/// `L h_j = ½ Σ a_{ij} ∂²_{ij} h_j + Σ b^i ∂_i h_j`. Independent of the
/// adjoint assembly; used to check operator duality.
pub fn forward_galerkin(model: &CoefficientModel, basis: &Basis) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
    let (d, r) = (model.d, model.r);
    let n = basis.len();
    let rule = GaussHermite::cached(quadrature_size(model, basis, basis).max(basis.spec().effective_nodes()) + 2);
    let mut a = vec![DMatrix::zeros(n, n); r];
    let mut l = DMatrix::zeros(n, n);
    let idx = basis.indices();
    let mut values = vec![0.0; n];
    let mut first = vec![vec![0.0; n]; d];
    let mut second = vec![vec![0.0; n]; d * d];
    for_each_tensor_node(&rule, d, |_, x, w| {
        let tables: Vec<Vec<Vec<f64>>> = x
            .iter()
            .map(|&xi| hermite_derivative_tables(basis.n_max(), 2, xi))
            .collect();
        for (j, k) in idx.iter().enumerate() {
            let mut orders = vec![0usize; d];
            let eval = |orders: &[usize]| -> f64 {
                k.entries()
                    .iter()
                    .enumerate()
                    .map(|(ax, &kk)| tables[ax][orders[ax]][kk])
                    .product()
            };
            values[j] = eval(&orders);
            for p in 0..d {
                orders[p] += 1;
                first[p][j] = eval(&orders);
                for q in 0..d {
                    orders[q] += 1;
                    second[p * d + q][j] = eval(&orders);
                    orders[q] -= 1;
                }
                orders[p] -= 1;
            }
        }
        let sigma = model.sigma_at(x);
        let b = model.drift_at(x);
        let diff = model.diffusion_at(x);
        for j in 0..n {
            let mut lh = 0.0;
            for p in 0..d {
                lh += b[p] * first[p][j];
                for q in 0..d {
                    lh += 0.5 * diff[p * d + q] * second[p * d + q][j];
                }
            }
            for (alpha, am) in a.iter_mut().enumerate() {
                let ah: f64 = (0..d).map(|p| sigma[p * r + alpha] * first[p][j]).sum();
                if ah != 0.0 {
                    for kk in 0..n {
                        am[(kk, j)] += w * values[kk] * ah;
                    }
                }
            }
            if lh != 0.0 {
                for kk in 0..n {
                    l[(kk, j)] += w * values[kk] * lh;
                }
            }
        }
    });
    Ok((a, l))
}
