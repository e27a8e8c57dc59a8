//! Monte Carlo realization of `ψ_t = E Y_t(ψ)`.

use nalgebra::DVector;
use serde::Serialize;

use crate::distributions::{pushforward, AdjointGalerkin, CompactDistribution};
use crate::error::{Error, Result};
use crate::flow::{simulate_flow, BrownianDriver, CoefficientModel, FlowOptions, Record};
use crate::hermite::series::sobolev_weight;
use crate::hermite::{Basis, HermiteSeries};
use crate::stats::{chunked, merge_all, VecStats};

/// Largest tolerated fraction of paths that blow up.
pub const BLOW_UP_LIMIT: f64 = 1e-3;

/// Per-snapshot statistics of `Y_t(ψ)` over paths.
#[derive(Debug, Clone)]
pub struct EnsembleMoments {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// Coefficient mean and variance at each recorded step.
    pub coeffs: Vec<VecStats>,
    /// `∥Y_t(ψ)∥²_{-p}` at each recorded step.
    pub norm_sq: Vec<VecStats>,
    pub paths: usize,
    pub blow_ups: usize,
}

/// Runs `paths` independent flows and accumulates `Y_t(ψ)` at the steps
/// selected by `record`.
pub fn ensemble_moments(
    psi: &CompactDistribution,
    model: &CoefficientModel,
    driver: &BrownianDriver,
    paths: usize,
    basis: &Basis,
    p: f64,
    record: Record,
) -> Result<EnsembleMoments> {
    let opts = FlowOptions {
        order: psi.order,
        track_inverse: false,
        record,
    };
    let starts = psi.start_points();
    let d = basis.d();
    let weights: Vec<f64> = basis
        .indices()
        .iter()
        .map(|k| sobolev_weight(k.total(), d, -p))
        .collect();
    struct Part {
        steps: Vec<usize>,
        times: Vec<f64>,
        coeffs: Vec<VecStats>,
        norm_sq: Vec<VecStats>,
        blow_ups: usize,
    }
    let parts = chunked(paths, |range| -> Result<Part> {
        let mut part = Part {
            steps: Vec::new(),
            times: Vec::new(),
            coeffs: Vec::new(),
            norm_sq: Vec::new(),
            blow_ups: 0,
        };
        for m in range {
            let ens = match simulate_flow(model, &starts, driver, m as u64, &opts) {
                Ok(e) => e,
                Err(Error::BlowUp { .. }) => {
                    part.blow_ups += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if part.steps.is_empty() {
                part.steps = ens.snapshots.iter().map(|s| s.step).collect();
                part.times = ens.snapshots.iter().map(|s| s.t).collect();
                part.coeffs = vec![VecStats::new(basis.len()); part.steps.len()];
                part.norm_sq = vec![VecStats::new(1); part.steps.len()];
            }
            for (i, snap) in ens.snapshots.iter().enumerate() {
                let y = pushforward(psi, &snap.points, basis)?;
                let nsq: f64 = y.coeffs().iter().zip(&weights).map(|(c, w)| w * c * c).sum();
                part.coeffs[i].push(y.coeffs());
                part.norm_sq[i].push(&[nsq]);
            }
        }
        Ok(part)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let blow_ups: usize = parts.iter().map(|p| p.blow_ups).sum();
    if blow_ups as f64 > BLOW_UP_LIMIT * paths as f64 {
        return Err(Error::TooManyBlowUps {
            failed: blow_ups,
            total: paths,
            limit_fraction: BLOW_UP_LIMIT,
        });
    }
    let template = parts
        .iter()
        .find(|p| !p.steps.is_empty())
        .ok_or_else(|| Error::InvalidArgument("no paths were simulated".into()))?;
    let (steps, times) = (template.steps.clone(), template.times.clone());
    let n_snap = steps.len();
    let mut coeffs = Vec::with_capacity(n_snap);
    let mut norm_sq = Vec::with_capacity(n_snap);
    for i in 0..n_snap {
        coeffs.push(merge_all(
            basis.len(),
            parts
                .iter()
                .filter(|p| !p.coeffs.is_empty())
                .map(|p| p.coeffs[i].clone())
                .collect(),
        ));
        norm_sq.push(merge_all(
            1,
            parts
                .iter()
                .filter(|p| !p.norm_sq.is_empty())
                .map(|p| p.norm_sq[i].clone())
                .collect(),
        ));
    }
    Ok(EnsembleMoments {
        steps,
        times,
        coeffs,
        norm_sq,
        paths,
        blow_ups,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentPoint {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub t: f64,
    pub series: HermiteSeries,
    pub std_errors: Vec<f64>,
    pub paths: usize,
    pub blow_ups: usize,
    pub dt: f64,
    pub seed: u64,
    pub p: f64,
    pub q: f64,
    /// `E ∥Y_t(ψ)∥²_{-p}` along the recorded times.
    pub second_moment: Vec<MomentPoint>,
    /// `∥ψ_t - P_{n_max/2} ψ_t∥_{-p} / ∥ψ_t∥_{-p}`.
    pub truncation_sensitivity: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub t_final: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub p: f64,
    pub q: f64,
    /// Number of intermediate times at which the second moment is recorded.
    pub checkpoints: usize,
}

/// `∥f - P_{n/2} f∥_{-p} / ∥f∥_{-p}`.
pub fn truncation_sensitivity(f: &HermiteSeries, p: f64) -> f64 {
    let half = f.basis().resized(f.basis().n_max() / 2).expect("same dimension");
    let low = f.restrict(&half).unwrap().restrict(f.basis()).unwrap();
    let total = f.sobolev_norm_sq(-p).sqrt();
    if total == 0.0 {
        return 0.0;
    }
    f.sub(&low).unwrap().sobolev_norm_sq(-p).sqrt() / total
}

fn record_for(n_steps: usize, checkpoints: usize) -> Record {
    if checkpoints == 0 || n_steps == 0 {
        Record::Final
    } else {
        Record::Every((n_steps / checkpoints).max(1))
    }
}

/// `ψ_t ≈ M^{-1} Σ_m Y_t(ψ)(ω_m)` with per-coefficient standard errors.
pub fn solve_forward_mc(
    psi: &CompactDistribution,
    model: &CoefficientModel,
    basis: &Basis,
    opts: &McOptions,
) -> Result<SolveReport> {
    let minimum = psi.d as f64 / 4.0 + psi.order as f64 / 2.0;
    if opts.p <= minimum {
        return Err(Error::InvalidArgument(format!(
            "p = {} must exceed d/4 + N/2 = {minimum}",
            opts.p
        )));
    }
    if opts.paths == 0 {
        return Err(Error::InvalidArgument("at least one path is required".into()));
    }
    let driver = BrownianDriver::for_horizon(model.r, opts.seed, opts.dt, opts.t_final);
    let mom = ensemble_moments(
        psi,
        model,
        &driver,
        opts.paths,
        basis,
        opts.p,
        record_for(driver.n_steps, opts.checkpoints),
    )?;
    let last = mom.coeffs.last().expect("final snapshot");
    let series = HermiteSeries::from_coeffs(basis, last.mean.clone())?;
    let second_moment = mom
        .times
        .iter()
        .zip(&mom.norm_sq)
        .map(|(&t, s)| MomentPoint {
            t,
            mean: s.mean[0],
            std_error: s.std_error()[0],
        })
        .collect();
    Ok(SolveReport {
        t: driver.horizon(),
        truncation_sensitivity: truncation_sensitivity(&series, opts.p),
        series,
        std_errors: last.std_error(),
        paths: opts.paths,
        blow_ups: mom.blow_ups,
        dt: driver.step(),
        seed: opts.seed,
        p: opts.p,
        q: opts.q,
        second_moment,
    })
}

/// MC mean and standard error of the stochastic-integral term
/// `Σ_m A^*(Y_{t_m}(ψ)) ΔB_m` at the horizon of `driver`.
pub fn martingale_term_mc(
    psi: &CompactDistribution,
    model: &CoefficientModel,
    galerkin: &AdjointGalerkin,
    driver: &BrownianDriver,
    paths: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let basis = &galerkin.basis;
    let opts = FlowOptions {
        order: psi.order,
        track_inverse: false,
        record: Record::All,
    };
    let starts = psi.start_points();
    let r = model.r;
    let parts = chunked(paths, |range| -> Result<VecStats> {
        let mut stats = VecStats::new(basis.len());
        for m in range {
            let inc = driver.increments(m as u64);
            let ens = simulate_flow(model, &starts, driver, m as u64, &opts)?;
            let mut acc = DVector::zeros(basis.len());
            for (n, snap) in ens.snapshots.iter().take(driver.n_steps).enumerate() {
                let y = DVector::from_column_slice(pushforward(psi, &snap.points, basis)?.coeffs());
                for alpha in 0..r {
                    acc += (&galerkin.a_star[alpha] * &y) * inc[n * r + alpha];
                }
            }
            stats.push(acc.as_slice());
        }
        Ok(stats)
    });
    let stats = merge_all(basis.len(), parts.into_iter().collect::<Result<Vec<_>>>()?);
    Ok((stats.mean.clone(), stats.std_error()))
}
