use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::multi_index::{graded_indices, MultiIndex};

/// SDE data `dX = σ(X) dB + b(X) dt` with `σ: R^d → R^{d×r}`.
///
/// `sigma` is stored row-major: entry `(i, α)` is `sigma[i * r + α]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub name: String,
    pub d: usize,
    pub r: usize,
    pub sigma: Vec<Field>,
    pub drift: Vec<Field>,
    /// Highest derivative order the flow may be asked for.
    pub k_max: usize,
}

const DEFAULT_K_MAX: usize = 6;

impl CoefficientModel {
    pub fn new(name: &str, d: usize, r: usize, sigma: Vec<Field>, drift: Vec<Field>) -> Result<Self> {
        let model = CoefficientModel {
            name: name.to_string(),
            d,
            r,
            sigma,
            drift,
            k_max: DEFAULT_K_MAX,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.r == 0 {
            return Err(Error::InvalidArgument("d and r must be positive".into()));
        }
        if self.sigma.len() != self.d * self.r || self.drift.len() != self.d {
            return Err(Error::InvalidArgument(format!(
                "expected {} diffusion and {} drift entries, got {} and {}",
                self.d * self.r,
                self.d,
                self.sigma.len(),
                self.drift.len()
            )));
        }
        if !self.sigma.iter().chain(&self.drift).all(|f| f.check_dimension(self.d)) {
            return Err(Error::InvalidArgument("field term with the wrong dimension".into()));
        }
        Ok(())
    }

    /// `σ = I`, `b = 0`.
    pub fn brownian(d: usize) -> Self {
        Self::constant(&identity(d), &vec![0.0; d]).renamed("brownian")
    }

    /// `σ = s I`, `b(x) = -θ x`.
    pub fn ou(d: usize, theta: f64, s: f64) -> Self {
        let sigma = identity(d).into_iter().map(|v| Field::constant(d, s * v)).collect();
        let drift = (0..d).map(|i| Field::coordinate(d, i, -theta)).collect();
        CoefficientModel::new("ou", d, d, sigma, drift).expect("well-formed builtin")
    }

    /// Constant `σ` (`d × r`, row-major) and `b`.
    pub fn constant(sigma: &[f64], b: &[f64]) -> Self {
        let d = b.len();
        let r = sigma.len() / d.max(1);
        CoefficientModel::new(
            "constant",
            d,
            r,
            sigma.iter().map(|&v| Field::constant(d, v)).collect(),
            b.iter().map(|&v| Field::constant(d, v)).collect(),
        )
        .expect("well-formed builtin")
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn sigma_field(&self, i: usize, alpha: usize) -> &Field {
        &self.sigma[i * self.r + alpha]
    }

    pub fn sigma_at(&self, x: &[f64]) -> Vec<f64> {
        self.sigma.iter().map(|f| f.eval(x)).collect()
    }

    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        self.drift.iter().map(|f| f.eval(x)).collect()
    }

    /// `∂^β σ^i_α(x)` in the same row-major layout.
    pub fn sigma_derivative(&self, x: &[f64], beta: &MultiIndex) -> Vec<f64> {
        self.sigma.iter().map(|f| f.derivative(x, beta)).collect()
    }

    pub fn drift_derivative(&self, x: &[f64], beta: &MultiIndex) -> Vec<f64> {
        self.drift.iter().map(|f| f.derivative(x, beta)).collect()
    }

    /// Jacobian `(∂_j σ^i_α)_{ij}` of the column `σ_α`.
    pub fn sigma_column_jacobian(&self, x: &[f64], alpha: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| {
            self.sigma_field(i, alpha).derivative(x, &MultiIndex::unit(self.d, j))
        })
    }

    pub fn drift_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| {
            self.drift[i].derivative(x, &MultiIndex::unit(self.d, j))
        })
    }

    /// Diffusion matrix `a = σ σ^T` at `x`, row-major `d × d`.
    pub fn diffusion_at(&self, x: &[f64]) -> Vec<f64> {
        let s = self.sigma_at(x);
        let (d, r) = (self.d, self.r);
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = (0..r).map(|k| s[i * r + k] * s[j * r + k]).sum();
            }
        }
        a
    }

    pub fn is_constant(&self) -> bool {
        self.sigma.iter().chain(&self.drift).all(Field::is_constant)
    }

    pub fn is_linear(&self) -> bool {
        self.sigma.iter().chain(&self.drift).all(Field::is_affine)
    }

    pub fn diffusion_is_zero(&self) -> bool {
        self.sigma.iter().all(Field::is_zero)
    }

    /// Highest polynomial degree among all coefficient entries.
    pub fn max_degree(&self) -> usize {
        self.sigma
            .iter()
            .chain(&self.drift)
            .map(Field::degree)
            .max()
            .unwrap_or(0)
    }

    /// Smallest `K` with `|σ(x)| + |b(x)| <= K (1 + |x|)` over the sample
    /// points (Frobenius norm for `σ`).
    pub fn linear_growth_constant(&self, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .map(|x| {
                let s: f64 = self.sigma_at(x).iter().map(|v| v * v).sum::<f64>().sqrt();
                let b: f64 = self.drift_at(x).iter().map(|v| v * v).sum::<f64>().sqrt();
                let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                (s + b) / (1.0 + nx)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation between the closed-form derivative oracles and
    /// central differences of the next-lower order, over `|β| <= order`.
    pub fn derivative_oracle_error(&self, points: &[Vec<f64>], order: usize) -> f64 {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for x in points {
            for beta in graded_indices(self.d, order) {
                if beta.is_zero() {
                    continue;
                }
                let axis = beta.entries().iter().position(|&k| k > 0).unwrap();
                let lower = beta.with_decremented(axis).unwrap();
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[axis] += h;
                xm[axis] -= h;
                for f in self.sigma.iter().chain(&self.drift) {
                    let fd = (f.derivative(&xp, &lower) - f.derivative(&xm, &lower)) / (2.0 * h);
                    let exact = f.derivative(x, &beta);
                    worst = worst.max((fd - exact).abs() / (1.0 + exact.abs()));
                }
            }
        }
        worst
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    v
}

/// A small grid on `[-2, 2]^d` for spot checks.
pub fn sample_grid(d: usize) -> Vec<Vec<f64>> {
    let ticks = [-2.0, -0.7, 0.0, 0.9, 2.0];
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                ticks.iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Wave;

    #[test]
    fn builtins_have_expected_flags() {
        let bm = CoefficientModel::brownian(2);
        assert!(bm.is_constant() && bm.is_linear());
        let ou = CoefficientModel::ou(1, 1.0, 1.0);
        assert!(!ou.is_constant() && ou.is_linear());
        assert_eq!(ou.drift_at(&[2.0]), vec![-2.0]);
        assert_eq!(ou.diffusion_at(&[0.3]), vec![1.0]);
    }

    #[test]
    fn growth_and_oracles() {
        let grid = sample_grid(1);
        let ou = CoefficientModel::ou(1, 1.0, 1.0);
        assert!(ou.linear_growth_constant(&grid) <= 1.0 + 1e-12);
        let wavy = CoefficientModel::new(
            "wavy",
            1,
            1,
            vec![Field {
                poly: vec![],
                waves: vec![Wave {
                    coef: 0.5,
                    freq: vec![2.0],
                    phase: 0.1,
                }],
            }
            .plus(Field::constant(1, 1.0))],
            vec![Field::coordinate(1, 0, -0.5)],
        )
        .unwrap();
        assert!(wavy.derivative_oracle_error(&grid, 4) < 1e-6);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        assert!(CoefficientModel::new("bad", 2, 1, vec![Field::zero()], vec![Field::zero(); 2]).is_err());
    }
}
