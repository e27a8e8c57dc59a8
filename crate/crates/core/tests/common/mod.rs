//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fwdrep::field::{Field, Wave};
use fwdrep::flow::CoefficientModel;
use fwdrep::multi_index::graded_indices;
use fwdrep::rng::derive_seed;
use fwdrep::MultiIndex;

/// Exact multivariate polynomial, `powers ↦ coefficient`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub d: usize,
    pub terms: BTreeMap<Vec<usize>, f64>,
}

impl Poly {
    pub fn constant(d: usize, c: f64) -> Self {
        Poly {
            d,
            terms: BTreeMap::from([(vec![0; d], c)]),
        }
    }

    /// Coefficients in `[-1, 1]` for every monomial of total degree `<= degree`.
    pub fn pseudo_random(d: usize, degree: usize, seed: u64) -> Self {
        let terms = graded_indices(d, degree)
            .into_iter()
            .enumerate()
            .map(|(j, k)| {
                let u = (derive_seed(seed, j as u64) >> 11) as f64 / (1u64 << 53) as f64;
                (k.entries().to_vec(), 2.0 * u - 1.0)
            })
            .collect();
        Poly { d, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| c * k.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            *terms.entry(k.clone()).or_insert(0.0) += c;
        }
        Poly { d: self.d, terms }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let k: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *terms.entry(k).or_insert(0.0) += ca * cb;
            }
        }
        Poly { d: self.d, terms }
    }

    pub fn derivative(&self, beta: &MultiIndex) -> Poly {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            if k.iter().zip(beta.entries()).any(|(e, b)| e < b) {
                continue;
            }
            let mut coef = *c;
            let mut powers = k.clone();
            for (e, &b) in powers.iter_mut().zip(beta.entries()) {
                for _ in 0..b {
                    coef *= *e as f64;
                    *e -= 1;
                }
            }
            *terms.entry(powers).or_insert(0.0) += coef;
        }
        Poly { d: self.d, terms }
    }

    /// `self ∘ maps`, with `maps.len() == self.d`.
    pub fn compose(&self, maps: &[Poly]) -> Poly {
        let inner = maps[0].d;
        let mut out = Poly::constant(inner, 0.0);
        for (k, c) in &self.terms {
            let mut term = Poly::constant(inner, *c);
            for (f, &e) in maps.iter().zip(k) {
                for _ in 0..e {
                    term = term.mul(f);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

/// `dX = (0.5 sin 2X - X) dt + (1 + 0.3 sin X) dB`.
pub fn nonlinear_model() -> CoefficientModel {
    let wave = |coef: f64, freq: f64| Field {
        poly: Vec::new(),
        waves: vec![Wave {
            coef,
            freq: vec![freq],
            phase: 0.0,
        }],
    };
    let sigma = Field::constant(1, 1.0).plus(wave(0.3, 1.0));
    let drift = wave(0.5, 2.0).plus(Field::coordinate(1, 0, -1.0));
    CoefficientModel::new("nonlinear", 1, 1, vec![sigma], vec![drift]).expect("valid model")
}

/// Quick configurations, one per command.
pub const SMALL_CONFIGS: [(&str, &str); 5] = [
    (
        "norms",
        r#"schema_version = 1
[norms]
d = 1
p = [0.75, 1.0]
x = [0.0, 1.0]
n_max = 128
"#,
    ),
    (
        "flow",
        r#"schema_version = 1
seed = 3
[model]
kind = "ou"
[flow]
starts = [-1.0, 0.5]
t = 0.5
dt = 1e-2
paths = 3
order = 2
record_every = 10
"#,
    ),
    (
        "solve",
        r#"schema_version = 1
seed = 4
[model]
kind = "brownian"
[distribution]
atoms = [[1.0, [1], [0.2]]]
[basis]
n_max = 16
[solver]
t = 0.5
dt = 1e-2
paths = 2000
galerkin = true
galerkin_dt = 1e-3
"#,
    ),
    (
        "kernel",
        r#"schema_version = 1
seed = 5
[model]
kind = "constant"
sigma = [1.0]
drift = [1.0]
[basis]
n_max = 16
[kernel]
x = 0.0
t = 0.5
dt = 0.05
paths = 2000
kde_grid = [0.0, 0.5, 1.0]
"#,
    ),
    (
        "verify",
        r#"schema_version = 1
seed = 6
[verify]
models = [{ kind = "brownian" }]
checks = ["duality", "monotonicity", "moment_probe"]
[verify.moment_probe]
paths = 200
"#,
    ),
];
