//! Acceptance suite. Run with
//! `cargo test --release --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fwdrep::distributions::{
    duality_check, faa_di_bruno, spde_residual, AdjointGalerkin, CompactDistribution, NamedDensity, PolyGaussian,
};
use fwdrep::flow::{BrownianDriver, CoefficientModel, Record};
use fwdrep::hermite::functions::{hermite_function_derivatives, hermite_functions};
use fwdrep::hermite::{delta_norm_mehler, delta_norm_series, norm_row, Basis, MehlerQuadrature};
use fwdrep::multi_index::graded_indices;
use fwdrep::quadrature::{GaussHermite, GaussLegendre};
use fwdrep::rng::derive_seed;
use fwdrep::solver::{
    check_monotonicity, check_symmetry, check_translation, default_p, ensemble_moments, martingale_term_mc,
    semigroup_bound, solve_forward_galerkin, superposition_check, KernelOptions, SemigroupOptions, TranslationOptions,
};
use fwdrep::MultiIndex;

use common::Poly;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Verdict;

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn c01_norm_routes_agree() -> Verdict {
    let start = Instant::now();
    let quad = MehlerQuadrature::default();
    let mut worst: f64 = 0.0;
    for d in [1usize, 2] {
        let n_max = if d == 1 { 512 } else { 256 };
        for p in [0.75, 1.0, 2.0] {
            for x in [0.0, 1.0, 2.0] {
                let mut point = vec![0.0; d];
                point[0] = x;
                let row = norm_row(&point, p, n_max, &quad).expect("norm row");
                worst = worst.max(row.rel_diff.expect("convergent row"));
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst <= 1e-3 && elapsed < Duration::from_secs(30),
        format!(
            "max rel diff {worst:.3e} (tol 1e-3), {:.1}s (limit 30s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn c02_divergence_threshold() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [1usize, 2] {
        let x = vec![0.5; d];
        let below = d as f64 / 4.0 - 0.05;
        let sums: Vec<f64> = [256, 1024, 4096]
            .iter()
            .map(|&n| delta_norm_series(&x, below, n).partial_sum)
            .collect();
        let growth = sums[2] / sums[0];
        ok &= sums.windows(2).all(|w| w[1] > w[0]) && growth >= 1.5;
        let above = d as f64 / 4.0 + 0.5;
        let levels = [256usize, 512, 1024, 2048, 4096];
        let conv: Vec<f64> = levels
            .iter()
            .map(|&n| delta_norm_series(&x, above, n).partial_sum)
            .collect();
        let change = conv.windows(2).map(|w| (w[1] - w[0]).abs() / w[1]).fold(0.0, f64::max);
        ok &= change <= 1e-2;
        notes.push(format!(
            "d={d}: growth {growth:.3} (>= 1.5), doubling change {change:.2e} (<= 1e-2)"
        ));
    }
    Verdict::new(ok, notes.join("; "))
}

fn c03_norm_decays_away_from_origin() -> Verdict {
    let quad = MehlerQuadrature::default();
    let values: Vec<f64> = [0.0, 1.0, 2.0, 3.0]
        .iter()
        .map(|&x| delta_norm_mehler(&[x], 1.0, &quad).expect("mehler").sqrt())
        .collect();
    let series: Vec<f64> = [0.0, 1.0, 2.0, 3.0]
        .iter()
        .map(|&x| delta_norm_series(&[x], 1.0, 512).corrected().sqrt())
        .collect();
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    Verdict::new(
        decreasing(&values) && decreasing(&series),
        format!("norms at |x| = 0..3: {values:.5?}"),
    )
}

fn c04_chain_rule_exhaustive() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 1..=3usize {
        let maps: Vec<Poly> = (0..d)
            .map(|i| Poly::pseudo_random(d, 4, 100 + (10 * d + i) as u64))
            .collect();
        let phi = Poly::pseudo_random(d, 4, 7 + d as u64);
        let composed = phi.compose(&maps);
        let points = [vec![0.3; d], (0..d).map(|i| -0.6 + 0.4 * i as f64).collect::<Vec<_>>()];
        for alpha in graded_indices(d, 4).into_iter().filter(|a| a.total() >= 1) {
            for x in &points {
                let y: Vec<f64> = maps.iter().map(|f| f.eval(x)).collect();
                let exp = faa_di_bruno(&alpha, d, |i, beta| Some(maps[i].derivative(beta).eval(x))).expect("expansion");
                let got = exp.apply(|g| phi.derivative(g).eval(&y));
                let want = composed.derivative(&alpha).eval(x);
                worst = worst.max((got - want).abs());
                cases += 1;
            }
        }
    }
    Verdict::new(
        worst <= 1e-9,
        format!("{cases} cases, max abs error {worst:.2e} (tol 1e-9)"),
    )
}

fn c05_pathwise_duality() -> Verdict {
    let phi = PolyGaussian {
        d: 1,
        terms: vec![(1.0, vec![0]), (0.5, vec![1]), (-0.2, vec![2]), (0.1, vec![4])],
        scale: 1.0,
    };
    let basis = Basis::with_degree(1, 16).unwrap();
    let models = [
        CoefficientModel::brownian(1),
        CoefficientModel::ou(1, 1.0, 1.0),
        common::nonlinear_model(),
    ];
    let mut worst: f64 = 0.0;
    for (i, model) in models.iter().enumerate() {
        let driver = BrownianDriver::for_horizon(model.r, 500 + i as u64, 1e-2, 0.5);
        for order in 0..=2 {
            let psi = CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![order]), &[0.3]);
            let rep = duality_check(&psi, model, &driver, 20, &phi, &basis, 1e-4).expect("duality");
            worst = worst.max(rep.max_error);
        }
    }
    Verdict::new(
        worst <= 1e-4,
        format!("max pathwise error {worst:.2e} over 3 models x 3 orders (tol 1e-4)"),
    )
}

fn c06_spde_residual_order() -> Verdict {
    let start = Instant::now();
    let model = CoefficientModel::brownian(1);
    let basis = Basis::with_degree(1, 32).unwrap();
    let g = AdjointGalerkin::assemble(&model, &basis).unwrap();
    let psi = CompactDistribution::delta(&[0.0]);
    let fine = BrownianDriver::for_horizon(1, 2024, 1e-3, 0.5);
    let coarse = fine.coarsen(4);
    let paths = 256u64;
    let (mut rc, mut rf) = (0.0, 0.0);
    for m in 0..paths {
        rc += spde_residual(&psi, &model, &g, &coarse, m, 3.0).unwrap().max;
        rf += spde_residual(&psi, &model, &g, &fine, m, 3.0).unwrap().max;
    }
    rc /= paths as f64;
    rf /= paths as f64;
    let order = (rc / rf).ln() / 4f64.ln();
    let elapsed = start.elapsed();
    Verdict::new(
        rf < rc && order >= 0.4 && elapsed < Duration::from_secs(120),
        format!(
            "mean max residual {rc:.3e} -> {rf:.3e}, order {order:.3} (>= 0.4), {:.1}s (limit 120s)",
            elapsed.as_secs_f64()
        ),
    )
}

/// Law of `X(t, x)` for the linear test models: mean, variance and `∂_x X`.
struct LinearLaw {
    theta: f64,
}

impl LinearLaw {
    fn mean(&self, x: f64, t: f64) -> f64 {
        x * (-self.theta * t).exp()
    }

    fn variance(&self, t: f64) -> f64 {
        if self.theta == 0.0 {
            t
        } else {
            -(-2.0 * self.theta * t).exp_m1() / (2.0 * self.theta)
        }
    }

    fn jacobian(&self, t: f64) -> f64 {
        (-self.theta * t).exp()
    }
}

const BUMP_BOX: (f64, f64) = (-0.5, 0.5);

/// Closed-form coefficients of `ψ_t` for `ψ ∈ {δ_0, ∂δ_0, bump}`.
fn law_oracle(law: &LinearLaw, which: usize, t: f64, n: usize) -> Vec<f64> {
    let gh = GaussHermite::cached(120);
    let v = law.variance(t);
    let start_coeffs = |x: f64, deriv: usize| -> Vec<f64> {
        (0..=n)
            .map(|k| {
                gh.expect_normal(law.mean(x, t), v, |z| {
                    if deriv == 0 {
                        hermite_functions(n, z)[k]
                    } else {
                        hermite_function_derivatives(n, 1, z)[k]
                    }
                })
            })
            .collect()
    };
    match which {
        0 => start_coeffs(0.0, 0),
        1 => start_coeffs(0.0, 1).into_iter().map(|c| -law.jacobian(t) * c).collect(),
        _ => {
            let (lo, hi) = BUMP_BOX;
            let mut acc = vec![0.0; n + 1];
            for (x, w) in GaussLegendre::new(64).on_interval(lo, hi) {
                let g = NamedDensity::Bump.eval(&[lo], &[hi], &[x]);
                for (a, c) in acc.iter_mut().zip(start_coeffs(x, 0)) {
                    *a += w * g * c;
                }
            }
            acc
        }
    }
}

fn test_distribution(which: usize) -> CompactDistribution {
    match which {
        0 => CompactDistribution::delta(&[0.0]),
        1 => CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![1]), &[0.0]),
        _ => {
            let (lo, hi) = BUMP_BOX;
            CompactDistribution::density(&MultiIndex::zero(1), &[lo], &[hi], 16, |x| {
                NamedDensity::Bump.eval(&[lo], &[hi], x)
            })
            .unwrap()
        }
    }
}

fn c07_forward_representation() -> Verdict {
    let start = Instant::now();
    let n = 16;
    let basis = Basis::with_degree(1, n).unwrap();
    // the truncated OU drift needs a wide basis to resolve t = 1
    let wide = Basis::with_degree(1, 512).unwrap();
    let paths = 100_000;
    let mut worst_oracle: f64 = 0.0;
    let mut worst_galerkin: f64 = 0.0;
    let cases = [
        (CoefficientModel::brownian(1), LinearLaw { theta: 0.0 }, 0.0125),
        (CoefficientModel::ou(1, 1.0, 1.0), LinearLaw { theta: 1.0 }, 2e-3),
    ];
    for (mi, (model, law, dt)) in cases.iter().enumerate() {
        let g = AdjointGalerkin::assemble(model, &wide).unwrap();
        for which in 0..3 {
            let psi = test_distribution(which);
            let driver = BrownianDriver::for_horizon(1, derive_seed(77, (mi * 8 + which) as u64), *dt, 1.0);
            let every = (0.25 / dt).round() as usize;
            let mom = ensemble_moments(
                &psi,
                model,
                &driver,
                paths,
                &basis,
                default_p(1, psi.order),
                Record::Every(every),
            )
            .unwrap();
            let gal = solve_forward_galerkin(&psi.to_series(&wide), &g, 1.0, 1e-3, 250).unwrap();
            for t in [0.25, 1.0] {
                let slot = mom
                    .times
                    .iter()
                    .position(|s| (s - t).abs() < 1e-9)
                    .expect("recorded time");
                let stats = &mom.coeffs[slot];
                let se = stats.std_error();
                let oracle = law_oracle(law, which, t, n);
                let reference = gal
                    .checkpoints
                    .iter()
                    .find(|c| (c.t - t).abs() < 1e-9)
                    .expect("galerkin checkpoint")
                    .series
                    .restrict(&basis)
                    .unwrap();
                for k in 0..=n {
                    worst_oracle = worst_oracle.max(z_score(stats.mean[k] - oracle[k], se[k]));
                    worst_galerkin = worst_galerkin.max(z_score(stats.mean[k] - reference.coeffs()[k], se[k]));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_oracle <= 4.0 && worst_galerkin <= 4.0 && elapsed < Duration::from_secs(300),
        format!(
            "max z vs law oracle {worst_oracle:.2}, vs Galerkin {worst_galerkin:.2} (band 4), {:.1}s (limit 300s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn c08_martingale_term_vanishes() -> Verdict {
    let basis = Basis::with_degree(1, 16).unwrap();
    let mut worst: f64 = 0.0;
    for (i, model) in [CoefficientModel::brownian(1), CoefficientModel::ou(1, 1.0, 1.0)]
        .iter()
        .enumerate()
    {
        let g = AdjointGalerkin::assemble(model, &basis).unwrap();
        for which in 0..2 {
            let psi = test_distribution(which);
            let driver = BrownianDriver::for_horizon(1, 900 + (2 * i + which) as u64, 1e-2, 0.5);
            let (mean, se) = martingale_term_mc(&psi, model, &g, &driver, 4000).unwrap();
            for (m, s) in mean.iter().zip(&se) {
                worst = worst.max(z_score(*m, *s));
            }
        }
    }
    Verdict::new(worst <= 4.0, format!("max |mean| / SE {worst:.2} (band 4)"))
}

fn c09_kernel_superposition() -> Verdict {
    let model = CoefficientModel::brownian(1);
    let basis = Basis::with_degree(1, 16).unwrap();
    let psi = CompactDistribution::density(&MultiIndex::zero(1), &[-0.5], &[0.5], 8, |x| {
        NamedDensity::Uniform.eval(&[-0.5], &[0.5], x)
    })
    .unwrap();
    let opts = KernelOptions {
        t: 0.5,
        dt: 1e-2,
        paths: 20_000,
        seed: 31,
    };
    let rep = superposition_check(&model, &psi, &basis, &opts, 40_000).unwrap();
    Verdict::new(
        rep.passed,
        format!(
            "{} nodes, max |diff| {:.2e}, max z {:.2} (band 4)",
            rep.nodes, rep.max_abs_diff, rep.max_z
        ),
    )
}

fn c10_symmetry() -> Verdict {
    let grid = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let opts = KernelOptions {
        t: 1.0,
        dt: 1e-2,
        paths: 20_000,
        seed: 41,
    };
    let bm = check_symmetry(&CoefficientModel::brownian(1), &grid, &opts).unwrap();
    let ou = check_symmetry(&CoefficientModel::ou(1, 1.0, 1.0), &grid, &opts).unwrap();
    Verdict::new(
        bm.symmetric && !ou.symmetric,
        format!(
            "brownian max z {:.2} (symmetric: {}), OU max z {:.2} (violation flagged: {})",
            bm.max_z, bm.symmetric, ou.max_z, !ou.symmetric
        ),
    )
}

fn c11_translation_invariance() -> Verdict {
    let model = CoefficientModel::constant(&[1.0], &[1.0]);
    let basis = Basis::with_degree(1, 32).unwrap();
    let opts = TranslationOptions {
        kernel: KernelOptions {
            t: 0.5,
            dt: 0.5,
            paths: 20_000,
            seed: 51,
        },
        p: 1.0,
        allowance: 1e-3,
        source_margin: 64,
        pathwise_paths: 8,
        pathwise_tolerance: 1e-10,
    };
    let rep = check_translation(&model, &[vec![1.0]], &basis, &opts).unwrap();
    let e = &rep.entries[0];
    Verdict::new(
        rep.passed,
        format!(
            "discrepancy {:.3e} <= 4 x {:.3e} + {:.0e}; pathwise pairing error {:.1e}",
            e.discrepancy, e.joint_se, e.allowance, rep.pathwise_pairing_error
        ),
    )
}

fn c12_monotonicity() -> Verdict {
    let rep = check_monotonicity(&CoefficientModel::constant(&[1.0], &[0.5]), 3.0, &[32, 64]).unwrap();
    let zero = check_monotonicity(&CoefficientModel::constant(&[0.0], &[0.0]), 3.0, &[32, 64]).unwrap();
    Verdict::new(
        rep.c_star.is_finite() && rep.drift < 0.1 && zero.c_star == 0.0,
        format!(
            "C* = {:.4e}, drift {:.2e} (< 0.1); zero model C* = {:e}",
            rep.c_star, rep.drift, zero.c_star
        ),
    )
}

fn c13_semigroup_bound() -> Verdict {
    let model = CoefficientModel::brownian(1);
    let basis = Basis::with_degree(1, 32).unwrap();
    let mut probes = Vec::new();
    for x in [-0.5, 0.0, 0.5] {
        probes.push((format!("delta({x})"), CompactDistribution::delta(&[x])));
        probes.push((
            format!("d_delta({x})"),
            CompactDistribution::derivative_delta(1.0, &MultiIndex::new(vec![1]), &[x]),
        ));
    }
    let opts = SemigroupOptions {
        p: 1.0,
        q: 3.5,
        t_final: 2.0,
        intervals: 16,
        dt: 1e-2,
        paths: 4000,
        seed: 61,
        reference_degree: 2048,
    };
    let rep = semigroup_bound(&model, &probes, &basis, &opts).unwrap();
    Verdict::new(
        rep.bounded,
        format!(
            "last-quarter mean {:.4e} <= first-quarter mean {:.4e} + 2 x {:.2e}",
            rep.last_quarter_mean, rep.first_quarter_mean, rep.quarter_se
        ),
    )
}

fn run_cli(command: &str, config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fwdrep"))
        .arg(command)
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn result_block(dir: &Path) -> String {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report");
    let v: serde_json::Value = serde_json::from_str(&text).expect("json");
    serde_json::to_string(&v["result"]).unwrap()
}

fn c14_reproducible_reports() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    for (command, text) in common::SMALL_CONFIGS {
        let config = tmp.path().join(format!("{command}.toml"));
        std::fs::write(&config, text).unwrap();
        let runs: Vec<_> = (0..2).map(|i| tmp.path().join(format!("{command}-{i}"))).collect();
        if !runs.iter().all(|dir| run_cli(command, &config, dir)) {
            mismatches.push(format!("{command}: run failed"));
            continue;
        }
        if result_block(&runs[0]) != result_block(&runs[1]) {
            mismatches.push(format!("{command}: result block"));
        }
        for entry in std::fs::read_dir(&runs[0]).unwrap() {
            let name = entry.unwrap().file_name();
            if name == "report.json" {
                continue;
            }
            let a = std::fs::read(runs[0].join(&name)).unwrap();
            let b = std::fs::read(runs[1].join(&name)).unwrap();
            if a != b {
                mismatches.push(format!("{command}: {}", name.to_string_lossy()));
            }
        }
    }
    Verdict::new(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!(
                "{} commands rerun, result blocks and output files identical",
                common::SMALL_CONFIGS.len()
            )
        } else {
            format!("differences: {}", mismatches.join(", "))
        },
    )
}

#[test]
fn acceptance_criteria() {
    let checks: [(&str, Check); 14] = [
        ("delta norm: series and Mehler routes agree", c01_norm_routes_agree),
        ("delta norm: divergence threshold at d/4", c02_divergence_threshold),
        ("delta norm: decay in |x|", c03_norm_decays_away_from_origin),
        ("chain rule: exhaustive up to order 4", c04_chain_rule_exhaustive),
        ("pathwise duality of the adjoint flow", c05_pathwise_duality),
        ("SPDE residual: convergence order", c06_spde_residual_order),
        (
            "forward representation: law oracle and Galerkin",
            c07_forward_representation,
        ),
        ("martingale term has zero mean", c08_martingale_term_vanishes),
        ("kernel superposition", c09_kernel_superposition),
        ("kernel symmetry and OU negative control", c10_symmetry),
        ("translation invariance", c11_translation_invariance),
        ("monotonicity constant", c12_monotonicity),
        ("semigroup bound: no growth trend", c13_semigroup_bound),
        ("reproducible report blocks", c14_reproducible_reports),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let label = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "{label} [{:>2}] {name}: {} ({:.1}s)",
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
