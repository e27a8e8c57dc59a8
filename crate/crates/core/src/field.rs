//! Scalar coefficient fields on `R^d`: sums of monomials and sine waves.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::jet::Scalar;
use crate::multi_index::MultiIndex;

/// `coef · x^powers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<usize>,
}

/// `coef · sin(freq · x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub coef: f64,
    pub freq: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Field {
    #[serde(default)]
    pub poly: Vec<Monomial>,
    #[serde(default)]
    pub waves: Vec<Wave>,
}

impl Field {
    pub fn zero() -> Self {
        Field::default()
    }

    pub fn constant(d: usize, c: f64) -> Self {
        Field {
            poly: vec![Monomial {
                coef: c,
                powers: vec![0; d],
            }],
            waves: Vec::new(),
        }
    }

    /// `c · x_axis`.
    pub fn coordinate(d: usize, axis: usize, c: f64) -> Self {
        let mut powers = vec![0; d];
        powers[axis] = 1;
        Field {
            poly: vec![Monomial { coef: c, powers }],
            waves: Vec::new(),
        }
    }

    pub fn plus(mut self, other: Field) -> Self {
        self.poly.extend(other.poly);
        self.waves.extend(other.waves);
        self
    }

    pub fn check_dimension(&self, d: usize) -> bool {
        self.poly.iter().all(|m| m.powers.len() == d) && self.waves.iter().all(|w| w.freq.len() == d)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for m in &self.poly {
            let mut v = m.coef;
            for (&k, &xi) in m.powers.iter().zip(x) {
                v *= xi.powi(k as i32);
            }
            total += v;
        }
        for w in &self.waves {
            let arg: f64 = w.freq.iter().zip(x).map(|(f, xi)| f * xi).sum::<f64>() + w.phase;
            total += w.coef * arg.sin();
        }
        total
    }

    /// Evaluation in any [`Scalar`] algebra, e.g. on Taylor jets.
    pub fn eval_generic<S: Scalar>(&self, x: &[S]) -> S {
        let mut total = x[0].lift(0.0);
        for m in &self.poly {
            let mut term = x[0].lift(m.coef);
            for (&k, xi) in m.powers.iter().zip(x) {
                for _ in 0..k {
                    term = term.times(xi);
                }
            }
            total = total.plus(&term);
        }
        for w in &self.waves {
            let mut arg = x[0].lift(w.phase);
            for (&f, xi) in w.freq.iter().zip(x) {
                if f != 0.0 {
                    arg = arg.plus(&xi.scale(f));
                }
            }
            total = total.plus(&arg.sin().scale(w.coef));
        }
        total
    }

    /// Closed-form `∂^β f(x)`.
    pub fn derivative(&self, x: &[f64], beta: &MultiIndex) -> f64 {
        let b = beta.entries();
        let mut total = 0.0;
        for m in &self.poly {
            let mut v = m.coef;
            for ((&k, &xi), &bi) in m.powers.iter().zip(x).zip(b) {
                if bi > k {
                    v = 0.0;
                    break;
                }
                let falling: f64 = (0..bi).map(|j| (k - j) as f64).product();
                v *= falling * xi.powi((k - bi) as i32);
            }
            total += v;
        }
        for w in &self.waves {
            let arg: f64 = w.freq.iter().zip(x).map(|(f, xi)| f * xi).sum::<f64>() + w.phase;
            let chain: f64 = w.freq.iter().zip(b).map(|(f, &bi)| f.powi(bi as i32)).product();
            total += w.coef * chain * (arg + beta.total() as f64 * FRAC_PI_2).sin();
        }
        total
    }

    pub fn degree(&self) -> usize {
        self.poly
            .iter()
            .filter(|m| m.coef != 0.0)
            .map(|m| m.powers.iter().sum())
            .max()
            .unwrap_or(0)
    }

    fn has_live_waves(&self) -> bool {
        self.waves
            .iter()
            .any(|w| w.coef != 0.0 && w.freq.iter().any(|&f| f != 0.0))
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0 && !self.has_live_waves()
    }

    pub fn is_affine(&self) -> bool {
        self.degree() <= 1 && !self.has_live_waves()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().all(|m| m.coef == 0.0) && self.waves.iter().all(|w| w.coef == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, JetLayout};

    fn sample() -> Field {
        Field {
            poly: vec![
                Monomial {
                    coef: 0.5,
                    powers: vec![2, 1],
                },
                Monomial {
                    coef: -1.0,
                    powers: vec![0, 3],
                },
            ],
            waves: vec![Wave {
                coef: 0.7,
                freq: vec![1.3, -0.4],
                phase: 0.2,
            }],
        }
    }

    #[test]
    fn closed_form_derivatives_match_jets() {
        let f = sample();
        let x = [0.4, -0.9];
        let layout = JetLayout::new(2, 3);
        let jx = [Jet::variable(&layout, 0, x[0]), Jet::variable(&layout, 1, x[1])];
        let jf = f.eval_generic(&jx);
        for beta in layout.monomials() {
            let a = f.derivative(&x, beta);
            let b = jf.derivative(beta);
            assert!((a - b).abs() < 1e-12, "{beta}: {a} vs {b}");
        }
        assert!((jf.value() - f.eval(&x)).abs() < 1e-14);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let f = sample();
        let x = [0.4, -0.9];
        let h = 1e-5;
        for axis in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            let exact = f.derivative(&x, &MultiIndex::unit(2, axis));
            assert!((fd - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn flags() {
        assert!(Field::constant(1, 2.0).is_constant());
        assert!(Field::coordinate(1, 0, -1.0).is_affine());
        assert!(!Field::coordinate(1, 0, -1.0).is_constant());
        assert!(!sample().is_affine());
    }
}
