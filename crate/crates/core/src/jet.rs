//! Truncated multivariate Taylor jets.
//!
//! A jet of order `K` in `d` variables stores the Taylor coefficients
//! `a_β = ∂^β f(x) / β!` for `|β| <= K`. Arithmetic on jets is exact up to
//! truncation, so evaluating a polynomial or trigonometric field on the jet of
//! the flow state yields the exact derivatives of the composite map.

use std::collections::HashMap;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::multi_index::{graded_indices, MultiIndex};

#[derive(Debug)]
pub struct JetLayout {
    d: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    factorials: Vec<f64>,
    lookup: HashMap<MultiIndex, usize>,
    /// `(i, j, k)` with `monomials[i] + monomials[j] = monomials[k]`.
    products: Vec<(u16, u16, u16)>,
}

impl JetLayout {
    pub fn new(d: usize, order: usize) -> Arc<Self> {
        let monomials = graded_indices(d, order);
        let lookup: HashMap<MultiIndex, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if a.total() + b.total() <= order {
                    let k = lookup[&a.add(b)];
                    products.push((i as u16, j as u16, k as u16));
                }
            }
        }
        let factorials = monomials.iter().map(|m| m.factorial()).collect();
        Arc::new(JetLayout {
            d,
            order,
            monomials,
            factorials,
            lookup,
            products,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn position(&self, beta: &MultiIndex) -> Option<usize> {
        self.lookup.get(beta).copied()
    }
}

type Coeffs = SmallVec<[f64; 10]>;

#[derive(Debug, Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    c: Coeffs,
}

impl Jet {
    pub fn constant(layout: &Arc<JetLayout>, v: f64) -> Self {
        let mut c: Coeffs = SmallVec::from_elem(0.0, layout.len());
        c[0] = v;
        Jet {
            layout: layout.clone(),
            c,
        }
    }

    /// The jet of `x ↦ x_axis` at the point with coordinate `v`.
    pub fn variable(layout: &Arc<JetLayout>, axis: usize, v: f64) -> Self {
        let mut j = Jet::constant(layout, v);
        if layout.order >= 1 {
            let pos = layout.lookup[&MultiIndex::unit(layout.d, axis)];
            j.c[pos] = 1.0;
        }
        j
    }

    pub fn from_taylor(layout: &Arc<JetLayout>, coeffs: &[f64]) -> Self {
        Jet {
            layout: layout.clone(),
            c: SmallVec::from_slice(coeffs),
        }
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn taylor(&self) -> &[f64] {
        &self.c
    }

    /// `∂^β f` (the Taylor coefficient times `β!`); zero beyond the order.
    pub fn derivative(&self, beta: &MultiIndex) -> f64 {
        self.layout
            .position(beta)
            .map_or(0.0, |i| self.c[i] * self.layout.factorials[i])
    }

    pub fn plus(&self, o: &Jet) -> Jet {
        let mut c = self.c.clone();
        for (a, b) in c.iter_mut().zip(&o.c) {
            *a += b;
        }
        Jet {
            layout: self.layout.clone(),
            c,
        }
    }

    pub fn times(&self, o: &Jet) -> Jet {
        let mut c: Coeffs = SmallVec::from_elem(0.0, self.c.len());
        for &(i, j, k) in &self.layout.products {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet {
            layout: self.layout.clone(),
            c,
        }
    }

    pub fn scale(&self, a: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            c: self.c.iter().map(|v| a * v).collect(),
        }
    }

    pub fn add_scalar(&self, a: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += a;
        out
    }

    /// `self += a * o`.
    pub fn axpy(&mut self, a: f64, o: &Jet) {
        for (x, y) in self.c.iter_mut().zip(&o.c) {
            *x += a * y;
        }
    }

    /// `Σ_m coeff[m] v^m` for the nilpotent part `v = self - value`.
    fn series_in_nilpotent(&self, coeff: impl Fn(usize) -> f64) -> Jet {
        let mut v = self.clone();
        v.c[0] = 0.0;
        let mut out = Jet::constant(&self.layout, coeff(0));
        let mut power = Jet::constant(&self.layout, 1.0);
        for m in 1..=self.layout.order {
            power = power.times(&v);
            out.axpy(coeff(m), &power);
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut fact = 1.0;
        let mut facts = vec![1.0];
        for m in 1..=self.layout.order {
            fact *= m as f64;
            facts.push(fact);
        }
        self.series_in_nilpotent(|m| e / facts[m])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        // sin(u0 + v) = Σ v^m / m! · sin^{(m)}(u0)
        self.series_in_nilpotent(|m| {
            let deriv = match m % 4 {
                0 => s,
                1 => c,
                2 => -s,
                _ => -c,
            };
            deriv / factorial(m)
        })
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.series_in_nilpotent(|m| {
            let deriv = match m % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            };
            deriv / factorial(m)
        })
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|j| j as f64).product()
}

/// Arithmetic needed to evaluate coefficient fields on plain numbers and on jets.
pub trait Scalar: Clone {
    /// A constant in the same algebra as `self`.
    fn lift(&self, v: f64) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn scale(&self, a: f64) -> Self;
    fn sin(&self) -> Self;
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, a: f64) -> Self {
        a * self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn value(&self) -> f64 {
        *self
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(&self.layout, v)
    }
    fn plus(&self, o: &Self) -> Self {
        Jet::plus(self, o)
    }
    fn times(&self, o: &Self) -> Self {
        Jet::times(self, o)
    }
    fn scale(&self, a: f64) -> Self {
        Jet::scale(self, a)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_in_two_variables() {
        let layout = JetLayout::new(2, 3);
        let x = Jet::variable(&layout, 0, 0.5);
        let y = Jet::variable(&layout, 1, -1.5);
        // f = x^2 y
        let f = x.times(&x).times(&y);
        let d = |v: &[usize]| f.derivative(&MultiIndex::new(v.to_vec()));
        assert!((d(&[0, 0]) - 0.25 * -1.5).abs() < 1e-15);
        assert!((d(&[1, 0]) - 2.0 * 0.5 * -1.5).abs() < 1e-15);
        assert!((d(&[2, 1]) - 2.0).abs() < 1e-15);
        assert!((d(&[1, 1]) - 1.0).abs() < 1e-15);
        assert_eq!(d(&[3, 0]), 0.0);
    }

    #[test]
    fn transcendental_derivatives() {
        let layout = JetLayout::new(1, 4);
        let x = Jet::variable(&layout, 0, 0.3);
        let s = x.scale(2.0).sin();
        let e = x.exp();
        let c = x.cos();
        for m in 0..=4 {
            let beta = MultiIndex::new(vec![m]);
            let phase = 0.6 + m as f64 * std::f64::consts::FRAC_PI_2;
            assert!((s.derivative(&beta) - 2f64.powi(m as i32) * phase.sin()).abs() < 1e-12);
            assert!((e.derivative(&beta) - 0.3f64.exp()).abs() < 1e-12);
            let cphase = 0.3 + m as f64 * std::f64::consts::FRAC_PI_2;
            assert!((c.derivative(&beta) - cphase.cos()).abs() < 1e-12);
        }
    }
}
