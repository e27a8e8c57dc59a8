use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{delta_coeffs, Basis, HermiteSeries};
use crate::jet::{Jet, JetLayout};
use crate::multi_index::MultiIndex;
use crate::quadrature::GaussLegendre;

/// `c ∂^γ δ_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub c: f64,
    pub gamma: MultiIndex,
    pub x: Vec<f64>,
}

/// Quadrature discretization of `∫_V g(x) ∂^α δ_x dx`: nodes `x_j` with
/// weights already multiplied by `g(x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTerm {
    pub alpha: MultiIndex,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l - 1e-12 <= *v && *v <= *h + 1e-12)
    }

    fn bounding(points: &[&Vec<f64>], d: usize) -> SupportBox {
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        SupportBox { lo, hi }
    }
}

/// A compactly supported distribution written as finitely many weighted
/// derivative-of-delta atoms plus discretized derivative-of-density terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactDistribution {
    pub d: usize,
    pub atoms: Vec<Atom>,
    pub densities: Vec<DensityTerm>,
    pub support: SupportBox,
    /// Highest derivative order present.
    pub order: usize,
}

/// Named densities for [`CompactDistribution::density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedDensity {
    /// Normalized indicator of the box.
    Uniform,
    /// Normalized `prod_i (1 - u_i^2)^3` with `u_i` the box coordinate mapped to `[-1, 1]`.
    Bump,
}

impl NamedDensity {
    pub fn eval(&self, lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((&l, &h), &xi) in lo.iter().zip(hi).zip(x) {
            let w = h - l;
            v *= match self {
                NamedDensity::Uniform => 1.0 / w,
                NamedDensity::Bump => {
                    let u = 2.0 * (xi - l) / w - 1.0;
                    // ∫_{-1}^{1} (1 - u^2)^3 du = 32/35
                    (1.0 - u * u).max(0.0).powi(3) * 35.0 / 16.0 / w
                }
            };
        }
        v
    }
}

impl CompactDistribution {
    fn build(d: usize, atoms: Vec<Atom>, densities: Vec<DensityTerm>, support: Option<SupportBox>) -> Result<Self> {
        let points: Vec<&Vec<f64>> = atoms
            .iter()
            .map(|a| &a.x)
            .chain(densities.iter().flat_map(|t| t.nodes.iter()))
            .collect();
        if points.iter().any(|p| p.len() != d)
            || atoms.iter().any(|a| a.gamma.dim() != d)
            || densities
                .iter()
                .any(|t| t.alpha.dim() != d || t.nodes.len() != t.weights.len())
        {
            return Err(Error::InvalidArgument("inconsistent dimensions in distribution".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("distribution has no atoms or nodes".into()));
        }
        let support = support.unwrap_or_else(|| SupportBox::bounding(&points, d));
        if let Some(p) = points.iter().find(|p| !support.contains(p)) {
            return Err(Error::InvalidArgument(format!("point {p:?} outside the support box")));
        }
        let order = atoms
            .iter()
            .map(|a| a.gamma.total())
            .chain(densities.iter().map(|t| t.alpha.total()))
            .max()
            .unwrap_or(0);
        Ok(CompactDistribution {
            d,
            atoms,
            densities,
            support,
            order,
        })
    }

    pub fn new(d: usize, atoms: Vec<Atom>, densities: Vec<DensityTerm>, support: Option<SupportBox>) -> Result<Self> {
        Self::build(d, atoms, densities, support)
    }

    /// `δ_x`.
    pub fn delta(x: &[f64]) -> Self {
        Self::derivative_delta(1.0, &MultiIndex::zero(x.len()), x)
    }

    /// `c ∂^γ δ_x`.
    pub fn derivative_delta(c: f64, gamma: &MultiIndex, x: &[f64]) -> Self {
        Self::build(
            x.len(),
            vec![Atom {
                c,
                gamma: gamma.clone(),
                x: x.to_vec(),
            }],
            Vec::new(),
            None,
        )
        .expect("single atom is well formed")
    }

    /// `∫_box g(x) ∂^α δ_x dx` on a tensor Gauss-Legendre grid with `n` nodes per axis.
    pub fn density<G: Fn(&[f64]) -> f64>(alpha: &MultiIndex, lo: &[f64], hi: &[f64], n: usize, g: G) -> Result<Self> {
        let d = lo.len();
        if hi.len() != d || alpha.dim() != d || lo.iter().zip(hi).any(|(l, h)| l >= h) {
            return Err(Error::InvalidArgument("malformed density box".into()));
        }
        let (nodes, base) = legendre_grid(lo, hi, n);
        let mut weights = Vec::with_capacity(nodes.len());
        for (x, w) in nodes.iter().zip(&base) {
            let v = g(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("density value {v} at {x:?}")));
            }
            weights.push(w * v);
        }
        let term = DensityTerm {
            alpha: alpha.clone(),
            nodes,
            weights,
        };
        Self::build(
            d,
            Vec::new(),
            vec![term],
            Some(SupportBox {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
            }),
        )
    }

    /// Density term from samples at the [`legendre_grid`] nodes.
    pub fn density_from_samples(alpha: &MultiIndex, lo: &[f64], hi: &[f64], n: usize, samples: &[f64]) -> Result<Self> {
        let expected = n.pow(lo.len() as u32);
        if samples.len() != expected {
            return Err(Error::MissingData(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        let mut it = samples.iter();
        let (nodes, _) = legendre_grid(lo, hi, n);
        let lookup: Vec<(Vec<f64>, f64)> = nodes.into_iter().map(|x| (x, *it.next().unwrap())).collect();
        Self::density(alpha, lo, hi, n, |x| {
            lookup
                .iter()
                .find(|(p, _)| p.as_slice() == x)
                .map_or(f64::NAN, |(_, v)| *v)
        })
    }

    /// `a ψ + b φ` (atoms and terms concatenated).
    pub fn combine(&self, a: f64, other: &CompactDistribution, b: f64) -> Result<Self> {
        let scale_atoms = |src: &[Atom], s: f64| {
            src.iter()
                .map(|at| Atom {
                    c: s * at.c,
                    ..at.clone()
                })
                .collect::<Vec<_>>()
        };
        let scale_terms = |src: &[DensityTerm], s: f64| {
            src.iter()
                .map(|t| DensityTerm {
                    weights: t.weights.iter().map(|w| s * w).collect(),
                    ..t.clone()
                })
                .collect::<Vec<_>>()
        };
        let mut atoms = scale_atoms(&self.atoms, a);
        atoms.extend(scale_atoms(&other.atoms, b));
        let mut terms = scale_terms(&self.densities, a);
        terms.extend(scale_terms(&other.densities, b));
        let lo = self
            .support
            .lo
            .iter()
            .zip(&other.support.lo)
            .map(|(x, y)| x.min(*y))
            .collect();
        let hi = self
            .support
            .hi
            .iter()
            .zip(&other.support.hi)
            .map(|(x, y)| x.max(*y))
            .collect();
        Self::build(self.d, atoms, terms, Some(SupportBox { lo, hi }))
    }

    /// All atom locations followed by all density nodes: the start points a
    /// flow must be simulated from.
    pub fn start_points(&self) -> Vec<Vec<f64>> {
        self.atoms
            .iter()
            .map(|a| a.x.clone())
            .chain(self.densities.iter().flat_map(|t| t.nodes.iter().cloned()))
            .collect()
    }

    /// Each start point with its weight and derivative index, in
    /// [`start_points`](Self::start_points) order.
    pub fn weighted_points(&self) -> Vec<(f64, &MultiIndex)> {
        self.atoms
            .iter()
            .map(|a| (a.c, &a.gamma))
            .chain(
                self.densities
                    .iter()
                    .flat_map(|t| t.weights.iter().map(move |&w| (w, &t.alpha))),
            )
            .collect()
    }

    /// `⟨ψ, φ⟩`, where `phi(x, β)` returns `∂^β φ(x)`.
    pub fn pair<F: Fn(&[f64], &MultiIndex) -> f64>(&self, phi: F) -> f64 {
        self.start_points()
            .iter()
            .zip(self.weighted_points())
            .map(|(x, (w, g))| w * g.parity_sign() * phi(x, g))
            .sum()
    }

    /// Hermite coefficients `⟨ψ, h_k⟩`.
    pub fn to_series(&self, basis: &Basis) -> HermiteSeries {
        let mut out = HermiteSeries::zeros(basis);
        for (x, (w, g)) in self.start_points().iter().zip(self.weighted_points()) {
            out.axpy(w, &delta_coeffs(x, g, basis)).expect("same basis");
        }
        out
    }
}

/// Tensor Gauss-Legendre nodes and weights on a box (axis 0 slowest).
pub fn legendre_grid(lo: &[f64], hi: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rule = GaussLegendre::new(n);
    let axes: Vec<Vec<(f64, f64)>> = lo.iter().zip(hi).map(|(&l, &h)| rule.on_interval(l, h)).collect();
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for axis in &axes {
        let mut nn = Vec::new();
        let mut nw = Vec::new();
        for (p, w) in nodes.iter().zip(&weights) {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                nn.push(q);
                nw.push(w * wx);
            }
        }
        nodes = nn;
        weights = nw;
    }
    (nodes, weights)
}

/// Test function `φ(x) = P(x) exp(-|x|^2 / (2 s^2))` with a polynomial `P`;
/// derivatives come from Taylor jets.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGaussian {
    pub d: usize,
    /// `(coefficient, powers)`.
    pub terms: Vec<(f64, Vec<usize>)>,
    pub scale: f64,
}

impl PolyGaussian {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.derivative(x, &MultiIndex::zero(self.d))
    }

    pub fn derivative(&self, x: &[f64], beta: &MultiIndex) -> f64 {
        let layout = JetLayout::new(self.d, beta.total());
        let vars: Vec<Jet> = (0..self.d).map(|i| Jet::variable(&layout, i, x[i])).collect();
        let mut poly = Jet::constant(&layout, 0.0);
        for (c, powers) in &self.terms {
            let mut t = Jet::constant(&layout, *c);
            for (v, &k) in vars.iter().zip(powers) {
                for _ in 0..k {
                    t = t.times(v);
                }
            }
            poly = poly.plus(&t);
        }
        let mut r2 = Jet::constant(&layout, 0.0);
        for v in &vars {
            r2 = r2.plus(&v.times(v));
        }
        let g = r2.scale(-0.5 / (self.scale * self.scale)).exp();
        poly.times(&g).derivative(beta)
    }
}
