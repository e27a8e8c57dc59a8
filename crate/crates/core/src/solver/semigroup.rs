//! MC estimate of `sup_t ∥S_t∥` from `S_{-p}` into `S_{-q}` on a probe set.

use serde::Serialize;

use super::mc::ensemble_moments;
use crate::distributions::CompactDistribution;
use crate::error::{Error, Result};
use crate::flow::{BrownianDriver, CoefficientModel, Record};
use crate::hermite::series::sobolev_weight;
use crate::hermite::Basis;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRatios {
    pub label: String,
    /// `∥ψ∥_{-p}` from the wide basis.
    pub norm_p: f64,
    /// `∥S_t ψ∥_{-q} / ∥ψ∥_{-p}` on the time grid.
    pub ratios: Vec<f64>,
    pub std_errors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemigroupReport {
    pub model: String,
    pub p: f64,
    pub q: f64,
    pub paths: usize,
    pub times: Vec<f64>,
    pub probes: Vec<ProbeRatios>,
    /// Largest ratio over probes at each time, with its standard error.
    pub sup_per_time: Vec<f64>,
    pub sup_std_errors: Vec<f64>,
    /// `max_{s <= t}` of `sup_per_time`.
    pub running_sup: Vec<f64>,
    /// Running sup at half the horizon.
    pub half_horizon_sup: f64,
    pub first_quarter_mean: f64,
    pub last_quarter_mean: f64,
    /// Joint standard error of the two quarter means.
    pub quarter_se: f64,
    /// No growth trend: last-quarter mean <= first-quarter mean + 2 SE.
    pub bounded: bool,
}

#[derive(Debug, Clone)]
pub struct SemigroupOptions {
    pub p: f64,
    pub q: f64,
    pub t_final: f64,
    /// Number of grid intervals on `[0, T]`.
    pub intervals: usize,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Degree of the basis used for `∥ψ∥_{-p}`.
    pub reference_degree: usize,
}

/// Smallest admissible `q` exponent bound, `(5/4) d + [p] + 1`.
pub fn semigroup_q_bound(d: usize, p: f64) -> f64 {
    1.25 * d as f64 + p.floor() + 1.0
}

fn quarter(values: &[f64], ses: &[f64], range: std::ops::Range<usize>) -> (f64, f64) {
    let n = range.len() as f64;
    let mean = values[range.clone()].iter().sum::<f64>() / n;
    let var = ses[range].iter().map(|s| s * s).sum::<f64>() / (n * n);
    (mean, var)
}

pub fn semigroup_bound(
    model: &CoefficientModel,
    probes: &[(String, CompactDistribution)],
    basis: &Basis,
    opts: &SemigroupOptions,
) -> Result<SemigroupReport> {
    let d = basis.d();
    if opts.q <= semigroup_q_bound(d, opts.p) {
        return Err(Error::InvalidArgument(format!(
            "q = {} must exceed (5/4)d + [p] + 1 = {}",
            opts.q,
            semigroup_q_bound(d, opts.p)
        )));
    }
    if probes.is_empty() || opts.intervals < 4 {
        return Err(Error::InvalidArgument(
            "need probes and at least four time intervals".into(),
        ));
    }
    let per_interval = ((opts.t_final / opts.intervals as f64) / opts.dt).round().max(1.0) as usize;
    let step = opts.t_final / (opts.intervals * per_interval) as f64;
    let driver = BrownianDriver::new(model.r, opts.seed, step, opts.intervals * per_interval);
    let reference = basis.resized(opts.reference_degree)?;
    let wq: Vec<f64> = basis
        .indices()
        .iter()
        .map(|k| sobolev_weight(k.total(), d, -opts.q))
        .collect();

    let mut out = Vec::with_capacity(probes.len());
    let mut times = Vec::new();
    for (label, psi) in probes {
        let norm_p = psi.to_series(&reference).sobolev_norm_sq(-opts.p).sqrt();
        if norm_p == 0.0 {
            return Err(Error::InvalidArgument(format!("probe '{label}' has zero norm")));
        }
        let mom = ensemble_moments(
            psi,
            model,
            &driver,
            opts.paths,
            basis,
            opts.p,
            Record::Every(per_interval),
        )?;
        times = mom.times.clone();
        let mut ratios = Vec::with_capacity(times.len());
        let mut ses = Vec::with_capacity(times.len());
        for stats in &mom.coeffs {
            let se = stats.std_error();
            let norm_sq: f64 = stats.mean.iter().zip(&wq).map(|(c, w)| w * c * c).sum();
            let norm = norm_sq.sqrt();
            // delta method for the norm of an MC mean
            let var: f64 = if norm > 0.0 {
                stats
                    .mean
                    .iter()
                    .zip(&wq)
                    .zip(&se)
                    .map(|((c, w), s)| (w * c / norm * s).powi(2))
                    .sum()
            } else {
                0.0
            };
            ratios.push(norm / norm_p);
            ses.push(var.sqrt() / norm_p);
        }
        out.push(ProbeRatios {
            label: label.clone(),
            norm_p,
            ratios,
            std_errors: ses,
        });
    }

    let n_t = times.len();
    let mut sup_per_time = vec![0.0; n_t];
    let mut sup_std_errors = vec![0.0; n_t];
    for i in 0..n_t {
        for probe in &out {
            if probe.ratios[i] > sup_per_time[i] {
                sup_per_time[i] = probe.ratios[i];
                sup_std_errors[i] = probe.std_errors[i];
            }
        }
    }
    let running_sup: Vec<f64> = sup_per_time
        .iter()
        .scan(0.0_f64, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect();
    let half = times
        .iter()
        .rposition(|&t| t <= 0.5 * opts.t_final + 1e-12)
        .unwrap_or(0);
    let q_len = (n_t / 4).max(1);
    let (first, v_first) = quarter(&sup_per_time, &sup_std_errors, 0..q_len);
    let (last, v_last) = quarter(&sup_per_time, &sup_std_errors, n_t - q_len..n_t);
    let quarter_se = (v_first + v_last).sqrt();
    Ok(SemigroupReport {
        model: model.name.clone(),
        p: opts.p,
        q: opts.q,
        paths: opts.paths,
        times,
        probes: out,
        half_horizon_sup: running_sup[half],
        bounded: last <= first + 2.0 * quarter_se,
        sup_per_time,
        sup_std_errors,
        running_sup,
        first_quarter_mean: first,
        last_quarter_mean: last,
        quarter_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::MultiIndex;

    fn opts(paths: usize) -> SemigroupOptions {
        SemigroupOptions {
            p: 1.0,
            q: 3.5,
            t_final: 1.0,
            intervals: 8,
            dt: 0.125,
            paths,
            seed: 3,
            reference_degree: 512,
        }
    }

    #[test]
    fn q_rule_is_enforced() {
        let basis = Basis::with_degree(1, 16).unwrap();
        let probes = vec![("delta".to_string(), CompactDistribution::delta(&[0.0]))];
        let mut o = opts(64);
        o.q = 3.0;
        assert!(semigroup_bound(&CoefficientModel::brownian(1), &probes, &basis, &o).is_err());
    }

    #[test]
    fn initial_ratio_is_at_most_one_and_heat_flow_decays() {
        let basis = Basis::with_degree(1, 24).unwrap();
        let probes = vec![
            ("delta".to_string(), CompactDistribution::delta(&[0.5])),
            (
                "dipole".to_string(),
                CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![1]), &[0.5]),
            ),
        ];
        let rep = semigroup_bound(&CoefficientModel::brownian(1), &probes, &basis, &opts(2048)).unwrap();
        assert_eq!(rep.times.len(), 9);
        for p in &rep.probes {
            assert!(p.ratios[0] <= 1.0);
            assert_eq!(p.std_errors[0], 0.0);
        }
        assert!(rep.bounded);
        assert!(rep.last_quarter_mean < rep.first_quarter_mean);
    }
}
