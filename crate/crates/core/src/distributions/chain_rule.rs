//! Multivariate chain rule for `∂^α (φ ∘ f)`.
//!
//! `∂^α (φ ∘ f)(x) = Σ_γ Q_γ (∂^γ φ)(f(x))`, where each `Q_γ` is a polynomial in
//! the derivative values `v_{i,β} = ∂^β f_i(x)`, `1 <= |β| <= |α|`. The
//! polynomials are built symbolically by applying one partial derivative at a
//! time: `∂_j` acts on `Q` by the product rule (`∂_j v_{i,β} = v_{i,β+e_j}`)
//! and on `(∂^γ φ)(f)` by `Σ_i v_{i,e_j} (∂^{γ+e_i} φ)(f)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

/// `v_{i,β}`.
type Var = (usize, MultiIndex);
/// Sorted product of variables.
type Mono = Vec<Var>;
/// Polynomial with (integer-valued) coefficients.
type Poly = BTreeMap<Mono, f64>;

/// Symbolic expansion: `γ ↦ Q_γ`.
#[derive(Debug)]
pub struct ChainRulePolynomials {
    pub alpha: MultiIndex,
    pub out_dim: usize,
    terms: BTreeMap<MultiIndex, Poly>,
}

impl ChainRulePolynomials {
    fn build(alpha: &MultiIndex, out_dim: usize) -> Self {
        let mut terms: BTreeMap<MultiIndex, Poly> = BTreeMap::new();
        terms.insert(MultiIndex::zero(out_dim), Poly::from([(Vec::new(), 1.0)]));
        let d_in = alpha.dim();
        for j in alpha.axis_sequence() {
            let mut next: BTreeMap<MultiIndex, Poly> = BTreeMap::new();
            for (gamma, poly) in &terms {
                // product rule on the coefficient polynomial
                for (mono, &c) in poly {
                    for pos in 0..mono.len() {
                        let mut m = mono.clone();
                        m[pos].1 = m[pos].1.with_incremented(j);
                        m.sort();
                        *next.entry(gamma.clone()).or_default().entry(m).or_insert(0.0) += c;
                    }
                }
                // chain rule on (∂^γ φ)(f)
                for i in 0..out_dim {
                    let g = gamma.with_incremented(i);
                    for (mono, &c) in poly {
                        let mut m = mono.clone();
                        m.push((i, MultiIndex::unit(d_in, j)));
                        m.sort();
                        *next.entry(g.clone()).or_default().entry(m).or_insert(0.0) += c;
                    }
                }
            }
            terms = next;
        }
        ChainRulePolynomials {
            alpha: alpha.clone(),
            out_dim,
            terms,
        }
    }

    /// Shared expansion for `α` and output dimension `out_dim`.
    pub fn cached(alpha: &MultiIndex, out_dim: usize) -> Arc<ChainRulePolynomials> {
        type Cache = Mutex<HashMap<(MultiIndex, usize), Arc<ChainRulePolynomials>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (alpha.clone(), out_dim);
        if let Some(hit) = cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let built = Arc::new(ChainRulePolynomials::build(alpha, out_dim));
        cache.lock().unwrap().entry(key).or_insert(built).clone()
    }

    /// Every `(i, β)` the polynomials refer to.
    pub fn variables(&self) -> Vec<Var> {
        let mut vars: Vec<Var> = self
            .terms
            .values()
            .flat_map(|p| p.keys().flat_map(|m| m.iter().cloned()))
            .collect();
        vars.sort();
        vars.dedup();
        vars
    }

    /// Total degree of `Q_γ` (equals `|γ|`).
    pub fn degree(&self, gamma: &MultiIndex) -> Option<usize> {
        self.terms.get(gamma).map(|p| p.keys().map(Vec::len).max().unwrap_or(0))
    }

    /// `Q_γ` evaluated for each `γ`, given `f_derivs(i, β) = ∂^β f_i(x)`.
    pub fn evaluate<F: Fn(usize, &MultiIndex) -> Option<f64>>(&self, f_derivs: F) -> Result<Vec<(MultiIndex, f64)>> {
        let mut values: HashMap<Var, f64> = HashMap::new();
        for (i, beta) in self.variables() {
            let v = f_derivs(i, &beta).ok_or_else(|| Error::MissingData(format!("∂^{beta} f_{i} not supplied")))?;
            values.insert((i, beta), v);
        }
        Ok(self
            .terms
            .iter()
            .map(|(gamma, poly)| {
                let q: f64 = poly
                    .iter()
                    .map(|(mono, c)| c * mono.iter().map(|v| values[v]).product::<f64>())
                    .sum();
                (gamma.clone(), q)
            })
            .collect())
    }
}

/// Evaluated chain-rule expansion: `∂^α (φ ∘ f)(x) = Σ_γ e_γ ⟨φ, ∂^γ δ_{f(x)}⟩`.
#[derive(Debug, Clone)]
pub struct ChainRuleExpansion {
    pub alpha: MultiIndex,
    /// `(γ, e_γ)` with `e_γ = (-1)^{|γ|} Q_γ`.
    pub terms: Vec<(MultiIndex, f64)>,
}

impl ChainRuleExpansion {
    /// `∂^α (φ ∘ f)(x)` from the derivatives `phi_at_f(γ) = (∂^γ φ)(f(x))`.
    pub fn apply<F: Fn(&MultiIndex) -> f64>(&self, phi_at_f: F) -> f64 {
        self.terms.iter().map(|(g, e)| e * g.parity_sign() * phi_at_f(g)).sum()
    }
}

/// Expansion of `∂^α (φ ∘ f)` at a point, for `f: R^d → R^{out_dim}`.
pub fn faa_di_bruno<F: Fn(usize, &MultiIndex) -> Option<f64>>(
    alpha: &MultiIndex,
    out_dim: usize,
    f_derivs: F,
) -> Result<ChainRuleExpansion> {
    let polys = ChainRulePolynomials::cached(alpha, out_dim);
    let terms = polys
        .evaluate(f_derivs)?
        .into_iter()
        .map(|(g, q)| {
            let e = g.parity_sign() * q;
            (g, e)
        })
        .collect();
    Ok(ChainRuleExpansion {
        alpha: alpha.clone(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_and_second_order_in_one_dimension() {
        let f = |_: usize, b: &MultiIndex| match b.total() {
            1 => Some(2.0),
            2 => Some(5.0),
            _ => None,
        };
        let e = faa_di_bruno(&MultiIndex::new(vec![1]), 1, f).unwrap();
        assert_eq!(e.terms, vec![(MultiIndex::new(vec![1]), -2.0)]);
        let e = faa_di_bruno(&MultiIndex::new(vec![2]), 1, f).unwrap();
        assert_eq!(
            e.terms,
            vec![(MultiIndex::new(vec![1]), -5.0), (MultiIndex::new(vec![2]), 4.0)]
        );
    }

    #[test]
    fn degree_of_q_gamma_is_the_order_of_gamma() {
        let polys = ChainRulePolynomials::cached(&MultiIndex::new(vec![2, 1]), 2);
        for g in polys.terms.keys() {
            assert_eq!(polys.degree(g), Some(g.total()));
            assert!(g.total() >= 1 && g.total() <= 3);
        }
    }

    #[test]
    fn missing_data_is_reported() {
        let r = faa_di_bruno(&MultiIndex::new(vec![2]), 1, |_, b| (b.total() < 2).then_some(1.0));
        assert!(matches!(r, Err(Error::MissingData(_))));
    }
}
