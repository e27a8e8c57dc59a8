//! Transition-kernel estimates `P(t, x, ·) = E δ_{X(t,x)}` and the checks
//! built on them: superposition, symmetry and translation invariance.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::mc::ensemble_moments;
use crate::distributions::{pushforward, pushforward_pairing, CompactDistribution, PolyGaussian};
use crate::error::{Error, Result};
use crate::flow::{simulate_flow, BrownianDriver, CoefficientModel, FlowOptions, Record};
use crate::hermite::series::sobolev_weight;
use crate::hermite::{hermite_functions_into, translate_into, translation_matrix_between, Basis, HermiteSeries};
use crate::multi_index::MultiIndex;
use crate::quadrature::GaussLegendre;
use crate::rng::derive_seed;
use crate::stats::{chunked, merge_all, VecStats};

/// Standard errors beyond which an MC discrepancy counts as a violation.
pub const SE_BAND: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct KernelEstimate {
    pub x: Vec<f64>,
    pub t: f64,
    pub series: HermiteSeries,
    pub std_errors: Vec<f64>,
    /// Pairing of the series with a smooth proxy of `𝟙` that equals 1 on
    /// `window` (the sample range, padded).
    pub mass: f64,
    pub mass_std_error: f64,
    pub window: (Vec<f64>, Vec<f64>),
    /// `X(t, x, ω_m)` for every path.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Endpoints `X(t, x, ω_m)`, `m < paths`.
pub fn kernel_samples(model: &CoefficientModel, x: &[f64], opts: &KernelOptions) -> Result<Vec<Vec<f64>>> {
    if !(opts.t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel time must be positive, got {}",
            opts.t
        )));
    }
    let driver = BrownianDriver::for_horizon(model.r, opts.seed, opts.dt.min(opts.t), opts.t);
    let flow = FlowOptions {
        order: 0,
        track_inverse: false,
        record: Record::Final,
    };
    let start = vec![x.to_vec()];
    let parts = chunked(opts.paths, |range| -> Result<Vec<Vec<f64>>> {
        range
            .map(|m| {
                Ok(simulate_flow(model, &start, &driver, m as u64, &flow)?.last().points[0]
                    .x
                    .clone())
            })
            .collect()
    });
    Ok(parts.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, `C^∞` in between.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Width of the smooth shoulders of the unit-mass proxy.
const PROXY_SHOULDER: f64 = 1.0;

/// `∫ χ h_k` for the proxy `χ` of `𝟙`: equal to 1 on `[lo, hi]`, falling
/// smoothly to 0 over one unit on each side.
fn proxy_integrals(basis: &Basis, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let rule = GaussLegendre::new(2 * basis.n_max() + 128);
    let d = basis.d();
    let n = basis.n_max() + 1;
    let one_d: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let (l, h) = (lo[a] - PROXY_SHOULDER, hi[a] + PROXY_SHOULDER);
            let mut acc = vec![0.0; n];
            let mut buf = vec![0.0; n];
            for (x, w) in rule.on_interval(l, h) {
                let chi = smooth_step((x - l) / PROXY_SHOULDER) * smooth_step((h - x) / PROXY_SHOULDER);
                hermite_functions_into(x, &mut buf);
                for (s, v) in acc.iter_mut().zip(&buf) {
                    *s += w * chi * v;
                }
            }
            acc
        })
        .collect();
    basis
        .indices()
        .iter()
        .map(|k| (0..d).map(|a| one_d[a][k.get(a)]).product())
        .collect()
}

/// MC mean of `delta_coeffs(X(t, x))` with standard errors and a mass check.
pub fn estimate_kernel(
    model: &CoefficientModel,
    x: &[f64],
    basis: &Basis,
    opts: &KernelOptions,
) -> Result<KernelEstimate> {
    if x.len() != basis.d() || model.d != basis.d() {
        return Err(Error::BasisMismatch(
            "start point, model and basis dimensions differ".into(),
        ));
    }
    let samples = kernel_samples(model, x, opts)?;
    kernel_from_samples(x, opts.t, samples, basis)
}

/// Builds a [`KernelEstimate`] from endpoint samples.
pub fn kernel_from_samples(x: &[f64], t: f64, samples: Vec<Vec<f64>>, basis: &Basis) -> Result<KernelEstimate> {
    let d = basis.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for s in &samples {
        for a in 0..d {
            lo[a] = lo[a].min(s[a]);
            hi[a] = hi[a].max(s[a]);
        }
    }
    for a in 0..d {
        let pad = 0.25 * (hi[a] - lo[a]);
        lo[a] -= pad;
        hi[a] += pad;
    }
    let ints = proxy_integrals(basis, &lo, &hi);
    let zero = MultiIndex::zero(d);
    let parts = chunked(samples.len(), |range| {
        let mut coeffs = VecStats::new(basis.len());
        let mut mass = VecStats::new(1);
        for m in range {
            let h = basis.eval_all(&samples[m], &zero);
            let pm: f64 = h.iter().zip(&ints).map(|(a, b)| a * b).sum();
            coeffs.push(&h);
            mass.push(&[pm]);
        }
        (coeffs, mass)
    });
    let (c_parts, m_parts): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    let coeffs = merge_all(basis.len(), c_parts);
    let mass = merge_all(1, m_parts);
    Ok(KernelEstimate {
        x: x.to_vec(),
        t,
        series: HermiteSeries::from_coeffs(basis, coeffs.mean.clone())?,
        std_errors: coeffs.std_error(),
        mass: mass.mean[0],
        mass_std_error: mass.std_error()[0],
        window: (lo, hi),
        samples,
    })
}

/// Gaussian kernel density estimate at `y` with Silverman's bandwidth, and
/// the standard error of that estimate over the samples.
pub fn gaussian_kde(samples: &[Vec<f64>], y: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let d = y.len();
    if n < 2 {
        return (f64::NAN, f64::NAN);
    }
    let factor = (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0));
    let bw: Vec<f64> = (0..d)
        .map(|a| {
            let mean = samples.iter().map(|s| s[a]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[a] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt().max(1e-12) * factor
        })
        .collect();
    let norm: f64 = bw.iter().map(|h| h * (2.0 * std::f64::consts::PI).sqrt()).product();
    let mut stats = VecStats::new(1);
    for s in samples {
        let e: f64 = (0..d).map(|a| ((y[a] - s[a]) / bw[a]).powi(2)).sum();
        stats.push(&[(-0.5 * e).exp() / norm]);
    }
    (stats.mean[0], stats.std_error()[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperpositionReport {
    pub t: f64,
    pub nodes: usize,
    /// `Σ_j w_j P̂(t, x_j, ·)`.
    pub superposed: HermiteSeries,
    pub direct: HermiteSeries,
    pub max_abs_diff: f64,
    /// Largest `|difference| / joint SE`.
    pub max_z: f64,
    pub passed: bool,
}

/// Compares `∫ ψ(x) P̂(t, x, ·) dx` (one independent kernel estimate per
/// quadrature node) with a direct MC solve of `ψ`. `psi` must be an order-0
/// density.
pub fn superposition_check(
    model: &CoefficientModel,
    psi: &CompactDistribution,
    basis: &Basis,
    opts: &KernelOptions,
    direct_paths: usize,
) -> Result<SuperpositionReport> {
    if !psi.atoms.is_empty() || psi.densities.iter().any(|t| !t.alpha.is_zero()) {
        return Err(Error::InvalidArgument("superposition needs a plain density".into()));
    }
    let mut mean = vec![0.0; basis.len()];
    let mut var = vec![0.0; basis.len()];
    let mut nodes = 0;
    for term in &psi.densities {
        for (x, &w) in term.nodes.iter().zip(&term.weights) {
            let node_opts = KernelOptions {
                seed: derive_seed(opts.seed, 1 + nodes as u64),
                ..*opts
            };
            let k = estimate_kernel(model, x, basis, &node_opts)?;
            for i in 0..basis.len() {
                mean[i] += w * k.series.coeffs()[i];
                var[i] += (w * k.std_errors[i]).powi(2);
            }
            nodes += 1;
        }
    }
    let driver = BrownianDriver::for_horizon(model.r, derive_seed(opts.seed, 0), opts.dt.min(opts.t), opts.t);
    let direct = ensemble_moments(psi, model, &driver, direct_paths, basis, 0.0, Record::Final)?;
    let direct_stats = direct.coeffs.last().expect("final snapshot");
    let direct_se = direct_stats.std_error();
    let mut max_abs_diff: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for i in 0..basis.len() {
        let diff = (mean[i] - direct_stats.mean[i]).abs();
        let se = (var[i] + direct_se[i].powi(2)).sqrt();
        max_abs_diff = max_abs_diff.max(diff);
        if se > 0.0 {
            max_z = max_z.max(diff / se);
        } else if diff > 0.0 {
            max_z = f64::INFINITY;
        }
    }
    Ok(SuperpositionReport {
        t: opts.t,
        nodes,
        superposed: HermiteSeries::from_coeffs(basis, mean)?,
        direct: HermiteSeries::from_coeffs(basis, direct_stats.mean.clone())?,
        max_abs_diff,
        max_z,
        passed: max_z <= SE_BAND,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryEntry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `p̂(t, x, y)`.
    pub forward: f64,
    /// `p̂(t, y, x)`.
    pub backward: f64,
    pub joint_se: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub model: String,
    pub t: f64,
    pub paths: usize,
    pub entries: Vec<SymmetryEntry>,
    pub max_abs_diff: f64,
    pub max_z: f64,
    /// True when every pair lies inside the band.
    pub symmetric: bool,
}

/// Kernel-density estimates `p̂(t, x_i, x_j)` against `p̂(t, x_j, x_i)` for
/// every pair of grid points, each start with its own independent paths.
pub fn check_symmetry(model: &CoefficientModel, grid: &[Vec<f64>], opts: &KernelOptions) -> Result<SymmetryReport> {
    let samples: Vec<Vec<Vec<f64>>> = grid
        .iter()
        .enumerate()
        .map(|(i, x)| {
            kernel_samples(
                model,
                x,
                &KernelOptions {
                    seed: derive_seed(opts.seed, i as u64),
                    ..*opts
                },
            )
        })
        .collect::<Result<_>>()?;
    let kde: Vec<Vec<(f64, f64)>> = samples
        .iter()
        .map(|s| grid.iter().map(|y| gaussian_kde(s, y)).collect())
        .collect();
    let mut entries = Vec::new();
    let (mut max_abs_diff, mut max_z) = (0.0_f64, 0.0_f64);
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let (f, fse) = kde[i][j];
            let (b, bse) = kde[j][i];
            let joint_se = (fse * fse + bse * bse).sqrt();
            let diff = (f - b).abs();
            if i != j {
                max_abs_diff = max_abs_diff.max(diff);
                max_z = max_z.max(diff / joint_se);
            }
            entries.push(SymmetryEntry {
                x: grid[i].clone(),
                y: grid[j].clone(),
                forward: f,
                backward: b,
                joint_se,
                violation: diff > SE_BAND * joint_se,
            });
        }
    }
    Ok(SymmetryReport {
        model: model.name.clone(),
        t: opts.t,
        paths: opts.paths,
        symmetric: !entries.iter().any(|e| e.violation),
        entries,
        max_abs_diff,
        max_z,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslationEntry {
    pub shift: Vec<f64>,
    /// `∥P̂(t, x, ·) - τ_x P̂(t, 0, ·)∥_{-p}`.
    pub discrepancy: f64,
    /// Root of the summed `-p`-weighted coefficient variances of both sides.
    pub joint_se: f64,
    pub allowance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslationReport {
    pub t: f64,
    pub p: f64,
    pub paths: usize,
    pub entries: Vec<TranslationEntry>,
    /// Largest pathwise `|⟨Y_t(ψ), φ⟩ - ⟨ψ, φ(· + ξ)⟩|` with `ξ = X(t, 0) `.
    pub pathwise_pairing_error: f64,
    /// Largest pathwise `∥Y_t(ψ) - τ_ξ ψ∥_{-p}` on the truncated basis.
    pub pathwise_series_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct TranslationOptions {
    pub kernel: KernelOptions,
    pub p: f64,
    /// Truncation allowance added to the SE band.
    pub allowance: f64,
    /// Extra degrees of the source basis for `τ_x`.
    pub source_margin: usize,
    pub pathwise_paths: usize,
    pub pathwise_tolerance: f64,
}

/// For a constant-coefficient model, `P(t, x, ·) = τ_x P(t, 0, ·)` for each
/// shift, plus the pathwise identity `Y_t(ψ) = τ_{X_t} ψ` on a bump density.
pub fn check_translation(
    model: &CoefficientModel,
    shifts: &[Vec<f64>],
    basis: &Basis,
    opts: &TranslationOptions,
) -> Result<TranslationReport> {
    if !model.is_constant() {
        return Err(Error::InvalidArgument(format!(
            "translation invariance needs constant coefficients, model '{}' is not",
            model.name
        )));
    }
    let d = basis.d();
    let zero = MultiIndex::zero(d);
    let origin = vec![0.0; d];
    let source = basis.resized(basis.n_max() + opts.source_margin)?;
    let base_samples = kernel_samples(model, &origin, &opts.kernel)?;
    let weights: Vec<f64> = basis
        .indices()
        .iter()
        .map(|k| sobolev_weight(k.total(), d, -opts.p))
        .collect();
    let mut entries = Vec::new();
    for (s_idx, shift) in shifts.iter().enumerate() {
        if shift.len() != d {
            return Err(Error::InvalidArgument("shift dimension mismatch".into()));
        }
        let tm: DMatrix<f64> = translation_matrix_between(basis, &source, shift);
        // τ_x applied path by path, so its spread is estimated directly
        let translated = merge_all(
            basis.len(),
            chunked(base_samples.len(), |range| {
                let mut st = VecStats::new(basis.len());
                for m in range {
                    let h = DVector::from_vec(source.eval_all(&base_samples[m], &zero));
                    st.push((&tm * h).as_slice());
                }
                st
            }),
        );
        let shifted = if shift.iter().all(|v| *v == 0.0) {
            None
        } else {
            let k_opts = KernelOptions {
                seed: derive_seed(opts.kernel.seed, 1 + s_idx as u64),
                ..opts.kernel
            };
            Some(estimate_kernel(model, shift, basis, &k_opts)?)
        };
        let (direct_mean, direct_se) = match &shifted {
            Some(k) => (k.series.coeffs().to_vec(), k.std_errors.clone()),
            None => (translated.mean.clone(), translated.std_error()),
        };
        let t_se = translated.std_error();
        let mut disc = 0.0;
        let mut var = 0.0;
        for i in 0..basis.len() {
            disc += weights[i] * (direct_mean[i] - translated.mean[i]).powi(2);
            if shifted.is_some() {
                var += weights[i] * (direct_se[i].powi(2) + t_se[i].powi(2));
            }
        }
        let (discrepancy, joint_se) = (disc.sqrt(), var.sqrt());
        entries.push(TranslationEntry {
            shift: shift.clone(),
            discrepancy,
            joint_se,
            allowance: opts.allowance,
            passed: discrepancy <= SE_BAND * joint_se + opts.allowance,
        });
    }
    let (pathwise_pairing_error, pathwise_series_error) = pathwise_translation(model, basis, opts)?;
    let passed = entries.iter().all(|e| e.passed) && pathwise_pairing_error <= opts.pathwise_tolerance;
    Ok(TranslationReport {
        t: opts.kernel.t,
        p: opts.p,
        paths: opts.kernel.paths,
        entries,
        pathwise_pairing_error,
        pathwise_series_error,
        passed,
    })
}

/// Bump density on `[-1/2, 1/2]^d` used by the pathwise check.
fn unit_bump(d: usize) -> Result<CompactDistribution> {
    let lo = vec![-0.5; d];
    let hi = vec![0.5; d];
    let bump = crate::distributions::NamedDensity::Bump;
    CompactDistribution::density(&MultiIndex::zero(d), &lo, &hi, 12, |x| bump.eval(&lo, &hi, x))
}

fn pathwise_translation(model: &CoefficientModel, basis: &Basis, opts: &TranslationOptions) -> Result<(f64, f64)> {
    let d = basis.d();
    let psi = unit_bump(d)?;
    let source = basis.resized(basis.n_max() + opts.source_margin)?;
    let psi_wide = psi.to_series(&source);
    let phi = PolyGaussian {
        d,
        terms: vec![(1.0, vec![0; d]), (0.5, vec![1; d]), (-0.25, vec![2; d])],
        scale: 1.0,
    };
    let driver = BrownianDriver::for_horizon(
        model.r,
        opts.kernel.seed,
        opts.kernel.dt.min(opts.kernel.t),
        opts.kernel.t,
    );
    let flow = FlowOptions {
        order: 0,
        track_inverse: false,
        record: Record::Final,
    };
    let mut starts = psi.start_points();
    starts.push(vec![0.0; d]);
    let (mut pair_err, mut series_err) = (0.0_f64, 0.0_f64);
    for m in 0..opts.pathwise_paths {
        let ens = simulate_flow(model, &starts, &driver, m as u64, &flow)?;
        let points = &ens.last().points;
        let (body, tail) = points.split_at(points.len() - 1);
        let xi = tail[0].x.clone();
        let lhs = pushforward_pairing(&psi, body, |x, g| phi.derivative(x, g))?;
        let rhs = psi.pair(|x, g| {
            let shifted: Vec<f64> = x.iter().zip(&xi).map(|(a, b)| a + b).collect();
            phi.derivative(&shifted, g)
        });
        pair_err = pair_err.max((lhs - rhs).abs());
        let y = pushforward(&psi, body, basis)?;
        let moved = translate_into(&psi_wide, &xi, basis);
        series_err = series_err.max(y.sub(&moved)?.sobolev_norm_sq(-opts.p).sqrt());
    }
    Ok((pair_err, series_err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_time_kernel_is_close_to_the_delta() {
        let basis = Basis::with_degree(1, 16).unwrap();
        let opts = KernelOptions {
            t: 1e-4,
            dt: 1e-4,
            paths: 512,
            seed: 4,
        };
        let k = estimate_kernel(&CoefficientModel::brownian(1), &[0.3], &basis, &opts).unwrap();
        let delta = CompactDistribution::delta(&[0.3]).to_series(&basis);
        let (a, b) = (k.series.coeffs(), delta.coeffs());
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(dot / (na * nb) > 0.999);
    }

    #[test]
    fn kernel_mass_is_one() {
        for (n, t) in [(32, 0.5), (64, 0.05)] {
            let basis = Basis::with_degree(1, n).unwrap();
            let opts = KernelOptions {
                t,
                dt: t,
                paths: 4096,
                seed: 9,
            };
            let k = estimate_kernel(&CoefficientModel::brownian(1), &[0.3], &basis, &opts).unwrap();
            assert!(
                (k.mass - 1.0).abs() < 4.0 * k.mass_std_error + 1e-3,
                "{} {}",
                k.mass,
                k.mass_std_error
            );
        }
    }

    #[test]
    fn kde_of_a_large_normal_sample() {
        let s: Vec<Vec<f64>> = (0..4000)
            .map(|i| vec![crate::rng::normal_from_uniform((i as f64 + 0.5) / 4000.0)])
            .collect();
        let (v, se) = gaussian_kde(&s, &[0.0]);
        let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - exact).abs() < 0.02, "{v}");
        assert!(se > 0.0);
    }

    #[test]
    fn diagonal_differences_vanish() {
        let grid = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let opts = KernelOptions {
            t: 1.0,
            dt: 1.0,
            paths: 256,
            seed: 2,
        };
        let rep = check_symmetry(&CoefficientModel::brownian(1), &grid, &opts).unwrap();
        for e in rep.entries.iter().filter(|e| e.x == e.y) {
            assert_eq!(e.forward, e.backward);
        }
    }

    #[test]
    fn translation_rejects_variable_coefficients() {
        let basis = Basis::with_degree(1, 8).unwrap();
        let opts = TranslationOptions {
            kernel: KernelOptions {
                t: 0.5,
                dt: 0.5,
                paths: 16,
                seed: 0,
            },
            p: 1.0,
            allowance: 1e-3,
            source_margin: 32,
            pathwise_paths: 2,
            pathwise_tolerance: 1e-8,
        };
        assert!(check_translation(&CoefficientModel::ou(1, 1.0, 1.0), &[vec![1.0]], &basis, &opts).is_err());
        let rep = check_translation(&CoefficientModel::constant(&[1.0], &[1.0]), &[vec![0.0]], &basis, &opts).unwrap();
        assert!(rep.entries[0].discrepancy < 1e-12);
        assert!(rep.pathwise_pairing_error < 1e-10);
    }
}
