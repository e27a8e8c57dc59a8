use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functions::hermite_derivative_tables;
use crate::error::{Error, Result};
use crate::multi_index::{graded_indices, MultiIndex};

/// Truncation of the Hermite basis: dimension, maximal total degree and the
/// per-axis Gauss-Hermite node count used for transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub d: usize,
    pub n_max: usize,
    #[serde(default)]
    pub quad_nodes: usize,
}

impl BasisSpec {
    pub fn new(d: usize, n_max: usize) -> Self {
        BasisSpec {
            d,
            n_max,
            quad_nodes: 2 * n_max + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if self.d > 3 {
            return Err(Error::InvalidArgument(format!(
                "tensor transforms are limited to d <= 3, got d = {}",
                self.d
            )));
        }
        Ok(())
    }

    /// Nodes per axis actually used: `max(quad_nodes, 2 n_max + 1)`.
    pub fn effective_nodes(&self) -> usize {
        self.quad_nodes.max(2 * self.n_max + 1)
    }
}

#[derive(Debug)]
struct BasisInner {
    spec: BasisSpec,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

/// Enumerated truncated basis `{h_k : |k| <= n_max}` in graded-lex order.
/// Cheap to clone.
#[derive(Debug, Clone)]
pub struct Basis(Arc<BasisInner>);

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.spec.d == other.0.spec.d && self.0.spec.n_max == other.0.spec.n_max)
    }
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        spec.validate()?;
        let indices = graded_indices(spec.d, spec.n_max);
        let lookup = indices.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Ok(Basis(Arc::new(BasisInner { spec, indices, lookup })))
    }

    pub fn with_degree(d: usize, n_max: usize) -> Result<Self> {
        Basis::new(BasisSpec::new(d, n_max))
    }

    pub fn spec(&self) -> BasisSpec {
        self.0.spec
    }

    pub fn d(&self) -> usize {
        self.0.spec.d
    }

    pub fn n_max(&self) -> usize {
        self.0.spec.n_max
    }

    pub fn len(&self) -> usize {
        self.0.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.0.indices
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        self.0.lookup.get(k).copied()
    }

    /// Same dimension, different truncation degree.
    pub fn resized(&self, n_max: usize) -> Result<Basis> {
        let mut spec = self.spec();
        spec.n_max = n_max;
        spec.quad_nodes = spec.quad_nodes.max(2 * n_max + 1);
        Basis::new(spec)
    }

    pub fn check_same(&self, other: &Basis) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch(format!(
                "(d={}, n_max={}) vs (d={}, n_max={})",
                self.d(),
                self.n_max(),
                other.d(),
                other.n_max()
            )))
        }
    }

    /// Per-axis derivative tables at `x`: `tables[axis][m][n] = h_n^{(m)}(x_axis)`.
    pub fn point_tables(&self, x: &[f64], max_order: usize) -> Vec<Vec<Vec<f64>>> {
        x.iter()
            .map(|&xi| hermite_derivative_tables(self.n_max(), max_order, xi))
            .collect()
    }

    /// `(∂^γ h_k)(x)` for all `k`, in basis order, from precomputed tables.
    pub fn eval_from_tables(&self, tables: &[Vec<Vec<f64>>], gamma: &MultiIndex, out: &mut [f64]) {
        let g = gamma.entries();
        match self.d() {
            1 => {
                let t = &tables[0][g[0]];
                out.copy_from_slice(&t[..out.len()]);
            }
            _ => {
                for (slot, k) in out.iter_mut().zip(self.indices()) {
                    *slot = k
                        .entries()
                        .iter()
                        .enumerate()
                        .map(|(axis, &ki)| tables[axis][g[axis]][ki])
                        .product();
                }
            }
        }
    }

    /// `(∂^γ h_k)(x)` for every basis index.
    pub fn eval_all(&self, x: &[f64], gamma: &MultiIndex) -> Vec<f64> {
        let max_order = gamma.entries().iter().copied().max().unwrap_or(0);
        let tables = self.point_tables(x, max_order);
        let mut out = vec![0.0; self.len()];
        self.eval_from_tables(&tables, gamma, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_nodes_respects_floor() {
        let spec = BasisSpec {
            d: 1,
            n_max: 10,
            quad_nodes: 5,
        };
        assert_eq!(spec.effective_nodes(), 21);
        assert!(Basis::new(BasisSpec::new(4, 2)).is_err());
        assert!(Basis::new(BasisSpec::new(0, 2)).is_err());
    }

    #[test]
    fn lookup_round_trips() {
        let basis = Basis::with_degree(3, 4).unwrap();
        for (i, k) in basis.indices().iter().enumerate() {
            assert_eq!(basis.position(k), Some(i));
        }
        assert_eq!(basis.len(), 35);
    }
}
