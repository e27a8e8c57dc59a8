//! The `norms`, `flow`, `solve` and `kernel` workflows.

use std::fmt::Write as _;

use serde_json::json;

use super::config::RunConfig;
use super::report::{Outcome, SummaryRow};
use crate::distributions::AdjointGalerkin;
use crate::error::{Error, Result};
use crate::flow::{
    flow_composition_check, inverse_jacobian_deviation, simulate_flow, trajectory_csv, BrownianDriver, FlowOptions,
    Record,
};
use crate::hermite::{norm_row, norms_csv, MehlerQuadrature};
use crate::solver::{
    estimate_kernel, gaussian_kde, solve_forward_galerkin, solve_forward_mc, KernelOptions, McOptions,
};

pub fn cmd_norms(cfg: &RunConfig) -> Result<Outcome> {
    let nc = cfg.section(&cfg.norms, "norms")?;
    if !(1..=3).contains(&nc.d) {
        return Err(Error::Config(format!("norms.d must be 1, 2 or 3, got {}", nc.d)));
    }
    let n_max = nc.n_max.unwrap_or(if nc.d == 1 { 512 } else { 256 });
    let quad = MehlerQuadrature {
        abs_tol: nc.mehler_abs_tol,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for x in &nc.x {
        let x = x.to_point(nc.d)?;
        for &p in &nc.p {
            rows.push(norm_row(&x, p, n_max, &quad)?);
        }
    }
    let mut summary = Vec::new();
    for r in &rows {
        let label = format!("x={:?} p={}", r.x, r.p);
        match r.rel_diff {
            None => summary.push(SummaryRow::new(label, "DIVERGENT", r.series_value, f64::NAN)),
            Some(rd) if r.p >= nc.assert_min_p => {
                summary.push(SummaryRow::check(label, rd <= nc.tolerance, rd, nc.tolerance))
            }
            Some(rd) => summary.push(SummaryRow::new(label, "INFO", rd, nc.tolerance)),
        }
    }
    Ok(Outcome {
        command: "norms",
        result: json!({ "d": nc.d, "n_max": n_max, "tolerance": nc.tolerance, "rows": rows }),
        summary,
        files: vec![("norms.csv".into(), norms_csv(&rows))],
    })
}

pub fn cmd_flow(cfg: &RunConfig) -> Result<Outcome> {
    let fc = cfg.section(&cfg.flow, "flow")?;
    let model = cfg.model()?;
    let seed = cfg.seed()?;
    let starts = fc
        .starts
        .iter()
        .map(|s| s.to_point(model.d))
        .collect::<Result<Vec<_>>>()?;
    if starts.is_empty() || !(fc.dt > 0.0) || !(fc.t >= 0.0) {
        return Err(Error::Config("flow needs starts, dt > 0 and t >= 0".into()));
    }
    let driver = BrownianDriver::for_horizon(model.r, seed, fc.dt, fc.t);
    let opts = FlowOptions {
        order: fc.order.max(1),
        track_inverse: true,
        record: Record::Every(fc.record_every.max(1)),
    };
    let split = fc.composition_split.unwrap_or(driver.n_steps / 2).min(driver.n_steps);
    let mut csv = String::new();
    let mut inverse_dev: f64 = 0.0;
    let mut composition: f64 = 0.0;
    let mut final_points = Vec::new();
    for path in 0..fc.paths as u64 {
        let ens = simulate_flow(&model, &starts, &driver, path, &opts)?;
        let block = trajectory_csv(&ens, model.d);
        if path == 0 {
            csv.push_str(&block);
        } else {
            csv.push_str(block.split_once('\n').map_or("", |(_, rest)| rest));
        }
        inverse_dev = inverse_dev.max(inverse_jacobian_deviation(&ens));
        final_points.push(ens.last().points.iter().map(|p| p.x.clone()).collect::<Vec<_>>());
        for x in &starts {
            let rep = flow_composition_check(&model, x, split, driver.n_steps - split, &driver, path)?;
            composition = composition.max(rep.discrepancy);
        }
    }
    let inverse_limit = fc.inverse_tolerance_factor * driver.step();
    let summary = vec![
        SummaryRow::check(
            "composition",
            composition <= fc.composition_tolerance,
            composition,
            fc.composition_tolerance,
        ),
        SummaryRow::check(
            "inverse_jacobian",
            inverse_dev <= inverse_limit,
            inverse_dev,
            inverse_limit,
        ),
    ];
    Ok(Outcome {
        command: "flow",
        result: json!({
            "model": model.name,
            "seed": seed,
            "dt": driver.step(),
            "n_steps": driver.n_steps,
            "paths": fc.paths,
            "composition_split": split,
            "composition_discrepancy": composition,
            "inverse_jacobian_deviation": inverse_dev,
            "final_points": final_points,
        }),
        summary,
        files: vec![("trajectories.csv".into(), csv)],
    })
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let sc = cfg.section(&cfg.solver, "solver")?;
    let model = cfg.model()?;
    let psi = cfg.distribution()?;
    if psi.d != model.d {
        return Err(Error::Config("distribution and model dimensions differ".into()));
    }
    let basis = cfg.basis(model.d)?;
    let (p, q) = sc.exponents(model.d, psi.order);
    let mut result = json!({
        "model": model.name,
        "d": model.d,
        "n_max": basis.n_max(),
        "t": sc.t,
        "p": p,
        "q": q,
    });
    let mut summary = Vec::new();
    let mut mc = None;
    if sc.mc {
        let opts = McOptions {
            t_final: sc.t,
            dt: sc.dt,
            paths: sc.paths,
            seed: cfg.seed()?,
            p,
            q,
            checkpoints: sc.checkpoints,
        };
        let rep = solve_forward_mc(&psi, &model, &basis, &opts)?;
        summary.push(SummaryRow::new("blow_ups", "INFO", rep.blow_ups as f64, 0.0));
        summary.push(SummaryRow::new(
            "truncation_sensitivity",
            "INFO",
            rep.truncation_sensitivity,
            f64::NAN,
        ));
        let sup_moment = rep.second_moment.iter().map(|m| m.mean).fold(0.0, f64::max);
        summary.push(SummaryRow::check(
            "second_moment_finite",
            sup_moment.is_finite(),
            sup_moment,
            f64::INFINITY,
        ));
        result["mc"] = serde_json::to_value(&rep)?;
        mc = Some(rep);
    }
    let mut gal = None;
    if sc.galerkin {
        let g = AdjointGalerkin::assemble(&model, &basis)?;
        let dt = sc.galerkin_dt.unwrap_or(sc.dt);
        let every = ((sc.t / dt).round() as usize / sc.checkpoints.max(1)).max(1);
        let run = solve_forward_galerkin(&psi.to_series(&basis), &g, sc.t, dt, every)?;
        summary.push(SummaryRow::new(
            "galerkin_residual",
            "INFO",
            run.max_residual(),
            f64::NAN,
        ));
        result["galerkin"] = json!({
            "dt": run.dt,
            "n_steps": run.n_steps,
            "checkpoints": run.checkpoints.iter().map(|c| json!({"t": c.t, "residual": c.residual})).collect::<Vec<_>>(),
            "series": run.last().series,
        });
        gal = Some(run);
    }
    let mut csv = String::from("index,k,mc,std_error,galerkin\n");
    for (i, k) in basis.indices().iter().enumerate() {
        let m = mc
            .as_ref()
            .map_or(String::new(), |r| format!("{:.12e}", r.series.coeffs()[i]));
        let s = mc
            .as_ref()
            .map_or(String::new(), |r| format!("{:.6e}", r.std_errors[i]));
        let g = gal
            .as_ref()
            .map_or(String::new(), |r| format!("{:.12e}", r.last().series.coeffs()[i]));
        let _ = writeln!(csv, "{i},{k},{m},{s},{g}");
    }
    if let (Some(m), Some(g)) = (&mc, &gal) {
        let mut max_z: f64 = 0.0;
        for ((a, b), se) in m
            .series
            .coeffs()
            .iter()
            .zip(g.last().series.coeffs())
            .zip(&m.std_errors)
        {
            let diff = (a - b).abs();
            let z = if *se > 0.0 {
                diff / se
            } else if diff > 1e-12 {
                f64::INFINITY
            } else {
                0.0
            };
            max_z = max_z.max(z);
        }
        summary.push(SummaryRow::check(
            "mc_vs_galerkin_z",
            max_z <= sc.se_band,
            max_z,
            sc.se_band,
        ));
        result["mc_vs_galerkin_max_z"] = json!(max_z);
    }
    Ok(Outcome {
        command: "solve",
        result,
        summary,
        files: vec![("series.csv".into(), csv)],
    })
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<Outcome> {
    let kc = cfg.section(&cfg.kernel, "kernel")?;
    let model = cfg.model()?;
    let basis = cfg.basis(model.d)?;
    let x = kc.x.to_point(model.d)?;
    let opts = KernelOptions {
        t: kc.t,
        dt: kc.dt,
        paths: kc.paths,
        seed: cfg.seed()?,
    };
    let k = estimate_kernel(&model, &x, &basis, &opts)?;
    let mut kde = Vec::new();
    let mut csv = String::from("y,density,std_error\n");
    for y in &kc.kde_grid {
        let y = y.to_point(model.d)?;
        let (v, se) = gaussian_kde(&k.samples, &y);
        let coords: Vec<String> = y.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(csv, "{},{v:.12e},{se:.6e}", coords.join(";"));
        kde.push(json!({ "y": y, "density": v, "std_error": se }));
    }
    let mass_err = (k.mass - 1.0).abs();
    let mass_limit = kc.se_band * k.mass_std_error + kc.mass_allowance;
    Ok(Outcome {
        command: "kernel",
        result: json!({ "model": model.name, "seed": opts.seed, "dt": kc.dt, "paths": kc.paths, "kernel": k, "kde": kde }),
        summary: vec![SummaryRow::check("mass", mass_err <= mass_limit, mass_err, mass_limit)],
        files: vec![("kde.csv".into(), csv)],
    })
}
