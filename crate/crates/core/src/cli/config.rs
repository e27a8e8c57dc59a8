//! TOML run configuration, schema version 1.

use serde::{Deserialize, Serialize};

use crate::distributions::{Atom, CompactDistribution, NamedDensity};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::flow::CoefficientModel;
use crate::hermite::{Basis, BasisSpec};
use crate::multi_index::MultiIndex;
use crate::solver::{default_p, default_q};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub model: Option<ModelSpec>,
    pub distribution: Option<DistributionSpec>,
    pub basis: Option<BasisConfig>,
    pub solver: Option<SolverConfig>,
    pub norms: Option<NormsConfig>,
    pub flow: Option<FlowConfig>,
    pub kernel: Option<KernelConfig>,
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian {
        #[serde(default = "one")]
        d: usize,
    },
    Ou {
        #[serde(default = "one")]
        d: usize,
        #[serde(default = "unit")]
        theta: f64,
        #[serde(default = "unit")]
        s: f64,
    },
    /// `σ` row-major `d × r`, `b` of length `d`.
    Constant { sigma: Vec<f64>, drift: Vec<f64> },
    /// `σ` fields row-major `d × r`, drift fields of length `d`.
    Polynomial {
        d: usize,
        r: usize,
        sigma: Vec<Field>,
        drift: Vec<Field>,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn build(&self) -> Result<CoefficientModel> {
        match self {
            ModelSpec::Brownian { d } => {
                check_dim(*d)?;
                Ok(CoefficientModel::brownian(*d))
            }
            ModelSpec::Ou { d, theta, s } => {
                check_dim(*d)?;
                Ok(CoefficientModel::ou(*d, *theta, *s))
            }
            ModelSpec::Constant { sigma, drift } => {
                check_dim(drift.len())?;
                if sigma.is_empty() || sigma.len() % drift.len() != 0 {
                    return Err(Error::Config(format!(
                        "constant model: sigma has {} entries, not a multiple of d = {}",
                        sigma.len(),
                        drift.len()
                    )));
                }
                if sigma.iter().chain(drift).any(|v| !v.is_finite()) {
                    return Err(Error::Config("constant model: non-finite coefficient".into()));
                }
                Ok(CoefficientModel::constant(sigma, drift))
            }
            ModelSpec::Polynomial { d, r, sigma, drift } => {
                check_dim(*d)?;
                CoefficientModel::new("polynomial", *d, *r, sigma.clone(), drift.clone())
            }
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension must be 1, 2 or 3, got {d}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    /// `[c, [γ...], [x...]]`.
    #[serde(default)]
    pub atoms: Vec<(f64, Vec<usize>, Vec<f64>)>,
    #[serde(default)]
    pub densities: Vec<DensitySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub alpha: Vec<usize>,
    pub grid: GridSpec,
    pub g: DensityValues,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityValues {
    /// `"uniform"` or `"bump"`.
    Named(String),
    Samples {
        samples: Vec<f64>,
    },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<CompactDistribution> {
        let mut dims = self
            .atoms
            .iter()
            .map(|a| a.2.len())
            .chain(self.densities.iter().map(|t| t.grid.lo.len()));
        let d = dims
            .next()
            .ok_or_else(|| Error::Config("distribution has no atoms and no densities".into()))?;
        check_dim(d)?;
        let atoms = self
            .atoms
            .iter()
            .map(|(c, g, x)| {
                if g.len() != d || x.len() != d {
                    return Err(Error::Config(format!(
                        "atom {x:?}: expected {d} coordinates and exponents"
                    )));
                }
                Ok(Atom {
                    c: *c,
                    gamma: MultiIndex::new(g.clone()),
                    x: x.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut dist = CompactDistribution::new(d, atoms, Vec::new(), None).map_err(config)?;
        for t in &self.densities {
            if t.alpha.len() != d || t.grid.lo.len() != d || t.grid.hi.len() != d || t.grid.n == 0 {
                return Err(Error::Config("density term: dimension mismatch or empty grid".into()));
            }
            let alpha = MultiIndex::new(t.alpha.clone());
            let (lo, hi) = (&t.grid.lo, &t.grid.hi);
            let term = match &t.g {
                DensityValues::Named(name) => {
                    let named = match name.as_str() {
                        "uniform" => NamedDensity::Uniform,
                        "bump" => NamedDensity::Bump,
                        other => return Err(Error::Config(format!("unknown density '{other}'"))),
                    };
                    CompactDistribution::density(&alpha, lo, hi, t.grid.n, |x| named.eval(lo, hi, x))
                }
                DensityValues::Samples { samples } => {
                    CompactDistribution::density_from_samples(&alpha, lo, hi, t.grid.n, samples)
                }
            }
            .map_err(config)?;
            dist = dist.combine(1.0, &term, 1.0).map_err(config)?;
        }
        Ok(dist)
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other if other.is_numerical() => other,
        other => Error::Config(other.to_string()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub n_max: usize,
    pub quad_nodes: Option<usize>,
}

impl BasisConfig {
    pub fn build(&self, d: usize) -> Result<Basis> {
        let mut spec = BasisSpec::new(d, self.n_max);
        if let Some(q) = self.quad_nodes {
            spec.quad_nodes = q;
        }
        Basis::new(spec).map_err(config)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "yes")]
    pub mc: bool,
    #[serde(default)]
    pub galerkin: bool,
    pub galerkin_dt: Option<f64>,
    /// Coefficient band, in standard errors, for the MC/Galerkin comparison.
    #[serde(default = "four")]
    pub se_band: f64,
}

fn default_checkpoints() -> usize {
    8
}

fn yes() -> bool {
    true
}

fn four() -> f64 {
    4.0
}

impl SolverConfig {
    /// `(p, q)` with the defaults applied for a distribution of order `order`.
    pub fn exponents(&self, d: usize, order: usize) -> (f64, f64) {
        let p = self.p.unwrap_or_else(|| default_p(d, order));
        (p, self.q.unwrap_or_else(|| default_q(p)))
    }
}

/// A point given either as a scalar (first coordinate, others zero) or in full.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointSpec {
    pub fn to_point(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            PointSpec::Scalar(v) => {
                let mut x = vec![0.0; d];
                x[0] = *v;
                Ok(x)
            }
            PointSpec::Vector(v) if v.len() == d => Ok(v.clone()),
            PointSpec::Vector(v) => Err(Error::Config(format!("point {v:?} is not {d}-dimensional"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub d: usize,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub x: Vec<PointSpec>,
    /// Series truncation degree; 512 for `d = 1`, 256 otherwise.
    pub n_max: Option<usize>,
    #[serde(default = "norms_tolerance")]
    pub tolerance: f64,
    /// Rows with `p` below this are reported but not asserted.
    #[serde(default = "assert_min_p")]
    pub assert_min_p: f64,
    #[serde(default = "mehler_tolerance")]
    pub mehler_abs_tol: f64,
}

fn norms_tolerance() -> f64 {
    1e-3
}

fn assert_min_p() -> f64 {
    0.75
}

fn mehler_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub starts: Vec<PointSpec>,
    pub t: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub paths: usize,
    #[serde(default = "one")]
    pub order: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Steps before the split of the composition check; half the run if absent.
    pub composition_split: Option<usize>,
    #[serde(default = "composition_tolerance")]
    pub composition_tolerance: f64,
    /// `max |J ∂X - I|` must stay below this multiple of `Δt`.
    #[serde(default = "inverse_factor")]
    pub inverse_tolerance_factor: f64,
}

fn composition_tolerance() -> f64 {
    1e-12
}

fn inverse_factor() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub x: PointSpec,
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    #[serde(default)]
    pub kde_grid: Vec<PointSpec>,
    #[serde(default = "four")]
    pub se_band: f64,
    #[serde(default = "mass_allowance")]
    pub mass_allowance: f64,
}

fn mass_allowance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default)]
    pub spde_residual: SpdeResidualCheck,
    #[serde(default)]
    pub duality: DualityCheck,
    #[serde(default)]
    pub symmetry: SymmetryCheck,
    #[serde(default)]
    pub translation: TranslationCheck,
    #[serde(default)]
    pub monotonicity: MonotonicityCheck,
    #[serde(default)]
    pub semigroup: SemigroupCheck,
    #[serde(default)]
    pub moment_probe: MomentProbeCheck,
}

pub const CHECK_NAMES: [&str; 7] = [
    "spde_residual",
    "duality",
    "symmetry",
    "translation",
    "monotonicity",
    "semigroup",
    "moment_probe",
];

fn default_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Brownian { d: 1 },
        ModelSpec::Ou {
            d: 1,
            theta: 1.0,
            s: 1.0,
        },
    ]
}

fn default_checks() -> Vec<String> {
    CHECK_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpdeResidualCheck {
    pub t: f64,
    pub coarse_dt: f64,
    pub fine_dt: f64,
    pub paths: usize,
    pub n_max: usize,
    pub q: f64,
    pub min_order: f64,
}

impl Default for SpdeResidualCheck {
    fn default() -> Self {
        SpdeResidualCheck {
            t: 0.5,
            coarse_dt: 4e-3,
            fine_dt: 1e-3,
            paths: 256,
            n_max: 32,
            q: 3.0,
            min_order: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualityCheck {
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub fd_step: f64,
    pub tolerance: f64,
    pub x: f64,
}

impl Default for DualityCheck {
    fn default() -> Self {
        DualityCheck {
            t: 0.5,
            dt: 1e-2,
            paths: 20,
            fd_step: 1e-4,
            tolerance: 1e-4,
            x: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetryCheck {
    pub t: f64,
    pub dt: f64,
    pub grid: Vec<f64>,
    pub paths: usize,
}

impl Default for SymmetryCheck {
    fn default() -> Self {
        SymmetryCheck {
            t: 1.0,
            dt: 1e-2,
            grid: vec![-1.0, 0.0, 1.0],
            paths: 20_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslationCheck {
    pub t: f64,
    pub dt: f64,
    pub shifts: Vec<f64>,
    pub paths: usize,
    pub n_max: usize,
    pub p: f64,
    pub allowance: f64,
    pub source_margin: usize,
    pub pathwise_paths: usize,
    pub pathwise_tolerance: f64,
}

impl Default for TranslationCheck {
    fn default() -> Self {
        TranslationCheck {
            t: 0.5,
            dt: 0.5,
            shifts: vec![0.0, 1.0],
            paths: 20_000,
            n_max: 32,
            p: 1.0,
            allowance: 1e-3,
            source_margin: 64,
            pathwise_paths: 8,
            pathwise_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotonicityCheck {
    pub q: f64,
    pub levels: Vec<usize>,
    pub max_drift: f64,
}

impl Default for MonotonicityCheck {
    fn default() -> Self {
        MonotonicityCheck {
            q: 3.0,
            levels: vec![32, 64],
            max_drift: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemigroupCheck {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub intervals: usize,
    pub dt: f64,
    pub paths: usize,
    pub n_max: usize,
    pub reference_degree: usize,
    pub probe_points: Vec<f64>,
}

impl Default for SemigroupCheck {
    fn default() -> Self {
        SemigroupCheck {
            p: 1.0,
            q: 3.5,
            t: 2.0,
            intervals: 16,
            dt: 1e-2,
            paths: 4000,
            n_max: 32,
            reference_degree: 2048,
            probe_points: vec![-0.5, 0.0, 0.5],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentProbeCheck {
    pub t: f64,
    pub dt: f64,
    pub checkpoints: usize,
    pub paths: usize,
    pub n_max: usize,
    pub se_band: f64,
}

impl Default for MomentProbeCheck {
    fn default() -> Self {
        MomentProbeCheck {
            t: 1.0,
            dt: 1e-2,
            checkpoints: 8,
            paths: 2000,
            n_max: 32,
            se_band: 4.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("`seed` is mandatory for Monte Carlo commands".into()))
    }

    pub fn model(&self) -> Result<CoefficientModel> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config("missing [model] table".into()))?
            .build()
            .map_err(config)
    }

    pub fn distribution(&self) -> Result<CompactDistribution> {
        self.distribution
            .as_ref()
            .ok_or_else(|| Error::Config("missing [distribution] table".into()))?
            .build()
    }

    pub fn basis(&self, d: usize) -> Result<Basis> {
        self.basis
            .as_ref()
            .ok_or_else(|| Error::Config("missing [basis] table".into()))?
            .build(d)
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing [{name}] table")))
    }
}
