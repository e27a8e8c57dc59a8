//! Quadrature rules: Gauss-Hermite (in Hermite-function form), Gauss-Legendre
//! and adaptive Gauss-Kronrod.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::hermite::functions::hermite_functions_into;

/// Gauss-Hermite rule with respect to `e^{-t^2}`.
///
/// Besides the classical weights `w_i` this stores the function-form weights
/// `lambda_i = w_i e^{t_i^2}`, so `int f(t) dt ~ sum_i lambda_i f(t_i)` is exact
/// whenever `f` is a polynomial of degree `<= 2n - 1` times `e^{-t^2}`. The
/// `lambda_i` are computed from the Christoffel function
/// `lambda_i = 1 / sum_{k<n} h_k(t_i)^2`, which stays accurate at the extreme
/// nodes where `w_i` underflows.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub function_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut table = vec![0.0; n + 1];
        for node in nodes.iter_mut() {
            // Newton polish on h_n, using h_n' = sqrt(2n) h_{n-1} - t h_n.
            for _ in 0..3 {
                hermite_functions_into(*node, &mut table);
                let hn = table[n];
                let dhn = (2.0 * n as f64).sqrt() * table[n - 1] - *node * hn;
                if dhn == 0.0 {
                    break;
                }
                let step = hn / dhn;
                *node -= step;
                if step.abs() < 1e-15 * node.abs().max(1.0) {
                    break;
                }
            }
        }
        // exact symmetry
        for i in 0..n / 2 {
            let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }

        let function_weights: Vec<f64> = nodes
            .iter()
            .map(|&t| {
                hermite_functions_into(t, &mut table[..n]);
                1.0 / table[..n].iter().map(|h| h * h).sum::<f64>()
            })
            .collect();
        let weights = nodes
            .iter()
            .zip(&function_weights)
            .map(|(&t, &l)| l * (-t * t).exp())
            .collect();
        GaussHermite {
            nodes,
            weights,
            function_weights,
        }
    }

    /// Shared, lazily built rule with `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&n) {
            return rule.clone();
        }
        let rule = Arc::new(GaussHermite::new(n));
        cache.lock().unwrap().entry(n).or_insert(rule).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_R f(t) dt` for `f` decaying like a Gaussian.
    pub fn integrate_function<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.function_weights)
            .map(|(&t, &l)| l * f(t))
            .sum()
    }

    /// `E f(Z)` for `Z ~ N(mean, variance)`.
    pub fn expect_normal<F: Fn(f64) -> f64>(&self, mean: f64, variance: f64, f: F) -> f64 {
        let scale = (2.0 * variance).sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mean + scale * t))
            .sum::<f64>()
            / std::f64::consts::PI.sqrt()
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let off = kf / (4.0 * kf * kf - 1.0).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], 2.0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Newton polish with the Legendre recurrence
        for (x, w) in pairs.iter_mut() {
            for _ in 0..2 {
                let (p, dp) = legendre_with_derivative(n, *x);
                *x -= p / dp;
            }
            let (_, dp) = legendre_with_derivative(n, *x);
            *w = 2.0 / ((1.0 - *x * *x) * dp * dp);
        }
        GaussLegendre {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mid + half * x, half * w))
            .collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.on_interval(a, b).iter().map(|&(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK15_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = GK15_KRONROD[7] * fc;
    let mut gauss = GK15_GAUSS[3] * fc;
    for j in 0..7 {
        let dx = half * GK15_NODES[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += GK15_KRONROD[j] * s;
        if j % 2 == 1 {
            gauss += GK15_GAUSS[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) settings.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveQuadrature {
    pub abs_tol: f64,
    pub initial_panels: usize,
    pub max_depth: usize,
}

impl Default for AdaptiveQuadrature {
    fn default() -> Self {
        AdaptiveQuadrature {
            abs_tol: 1e-10,
            initial_panels: 4,
            max_depth: 60,
        }
    }
}

impl AdaptiveQuadrature {
    /// Integrates `f` over `[a, b]`; returns the value and an error estimate.
    ///
    /// Each initial panel receives an equal share of the tolerance and is
    /// bisected recursively until its Kronrod-Gauss difference is below its
    /// share.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> (f64, f64) {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: usize) -> (f64, f64) {
            let (value, err) = whole;
            if err <= tol || depth == 0 || (b - a).abs() < 1e-300 {
                return (value, err);
            }
            let m = 0.5 * (a + b);
            let left = gk15(f, a, m);
            let right = gk15(f, m, b);
            let (lv, le) = rec(f, a, m, left, 0.5 * tol, depth - 1);
            let (rv, re) = rec(f, m, b, right, 0.5 * tol, depth - 1);
            (lv + rv, le + re)
        }
        let panels = self.initial_panels.max(1);
        let width = (b - a) / panels as f64;
        let share = self.abs_tol / panels as f64;
        let mut total = 0.0;
        let mut err = 0.0;
        for i in 0..panels {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == panels { b } else { lo + width };
            let (v, e) = rec(&f, lo, hi, gk15(&f, lo, hi), share, self.max_depth);
            total += v;
            err += e;
        }
        (total, err)
    }
}
