//! Euler-Maruyama flow with exact derivatives of the discrete update map.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::driver::BrownianDriver;
use super::model::CoefficientModel;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetLayout};
use crate::multi_index::MultiIndex;

const BLOW_UP_LEVEL: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    /// Only the state at the last step.
    Final,
    /// Every `n`-th step, plus step 0 and the last step.
    Every(usize),
    All,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Derivative order `K` of the tensors `∂^β X`, `|β| <= K`.
    pub order: usize,
    /// Propagate the inverse Jacobian by its own SDE.
    pub track_inverse: bool,
    pub record: Record,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            order: 2,
            track_inverse: false,
            record: Record::Final,
        }
    }
}

/// State of one start point at one time.
#[derive(Debug, Clone)]
pub struct PointState {
    pub x: Vec<f64>,
    /// Taylor jets of `X^i` in the start point; empty when the order is 0.
    pub jets: Vec<Jet>,
    /// Inverse Jacobian, row-major `d × d`, when tracked.
    pub jinv: Option<Vec<f64>>,
}

impl PointState {
    /// `∂^β X^i`; `β = 0` gives `X^i`.
    pub fn derivative(&self, i: usize, beta: &MultiIndex) -> f64 {
        if beta.is_zero() {
            self.x[i]
        } else if self.jets.is_empty() {
            0.0
        } else {
            self.jets[i].derivative(beta)
        }
    }

    /// `∂X` when the order is at least 1.
    pub fn jacobian(&self) -> Option<DMatrix<f64>> {
        if self.jets.is_empty() || self.jets[0].layout().order() == 0 {
            return None;
        }
        let d = self.x.len();
        Some(DMatrix::from_fn(d, d, |i, j| {
            self.jets[i].derivative(&MultiIndex::unit(d, j))
        }))
    }

    pub fn inverse_jacobian(&self) -> Option<DMatrix<f64>> {
        let d = self.x.len();
        self.jinv.as_ref().map(|j| DMatrix::from_row_slice(d, d, j))
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub points: Vec<PointState>,
}

/// The flow of one Brownian path `ω` from a set of start points.
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    pub path: u64,
    pub order: usize,
    pub dt: f64,
    pub starts: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
}

impl FlowEnsemble {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("at least one snapshot")
    }

    pub fn at_step(&self, step: usize) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&step, |s| s.step)
            .ok()
            .map(|i| &self.snapshots[i])
    }
}

fn should_record(record: Record, step: usize, last: usize) -> bool {
    match record {
        Record::Final => step == last,
        Record::All => true,
        Record::Every(n) => step == 0 || step == last || step % n.max(1) == 0,
    }
}

fn check_finite(values: impl IntoIterator<Item = f64>) -> bool {
    values.into_iter().all(|v| v.is_finite() && v.abs() < BLOW_UP_LEVEL)
}

/// Simulates `X(t, x)` for every start point under path `path` of `driver`.
pub fn simulate_flow(
    model: &CoefficientModel,
    starts: &[Vec<f64>],
    driver: &BrownianDriver,
    path: u64,
    opts: &FlowOptions,
) -> Result<FlowEnsemble> {
    let increments = driver.increments(path);
    simulate_with_increments(model, starts, &increments, driver.step(), path, opts)
}

/// Same as [`simulate_flow`] with explicit increments (`n_steps × r`).
pub fn simulate_with_increments(
    model: &CoefficientModel,
    starts: &[Vec<f64>],
    increments: &[f64],
    dt: f64,
    path: u64,
    opts: &FlowOptions,
) -> Result<FlowEnsemble> {
    if opts.order > model.k_max {
        return Err(Error::OrderTooHigh {
            requested: opts.order,
            limit: model.k_max,
        });
    }
    let (d, r) = (model.d, model.r);
    if starts.iter().any(|x| x.len() != d) {
        return Err(Error::InvalidArgument("start point of the wrong dimension".into()));
    }
    let n_steps = increments.len() / r;
    let layout = (opts.order > 0).then(|| JetLayout::new(d, opts.order));

    let mut states: Vec<PointState> = starts
        .iter()
        .map(|x| PointState {
            x: x.clone(),
            jets: match &layout {
                Some(l) => (0..d).map(|i| Jet::variable(l, i, x[i])).collect(),
                None => Vec::new(),
            },
            jinv: opts.track_inverse.then(|| {
                let mut id = vec![0.0; d * d];
                (0..d).for_each(|i| id[i * d + i] = 1.0);
                id
            }),
        })
        .collect();

    let mut snapshots = Vec::new();
    if should_record(opts.record, 0, n_steps) {
        snapshots.push(Snapshot {
            step: 0,
            t: 0.0,
            points: states.clone(),
        });
    }
    for n in 0..n_steps {
        let db = &increments[n * r..(n + 1) * r];
        for state in states.iter_mut() {
            step_point(model, state, db, dt, layout.as_ref());
            let ok = check_finite(state.x.iter().copied())
                && state.jets.iter().all(|j| check_finite(j.taylor().iter().copied()))
                && state.jinv.as_ref().is_none_or(|j| check_finite(j.iter().copied()));
            if !ok {
                return Err(Error::BlowUp {
                    path,
                    step: n + 1,
                    time: (n + 1) as f64 * dt,
                });
            }
        }
        if should_record(opts.record, n + 1, n_steps) {
            snapshots.push(Snapshot {
                step: n + 1,
                t: (n + 1) as f64 * dt,
                points: states.clone(),
            });
        }
    }
    Ok(FlowEnsemble {
        path,
        order: opts.order,
        dt,
        starts: starts.to_vec(),
        snapshots,
    })
}

fn step_point(model: &CoefficientModel, state: &mut PointState, db: &[f64], dt: f64, layout: Option<&Arc<JetLayout>>) {
    let (d, r) = (model.d, model.r);
    let x_old = state.x.clone();
    if let Some(jinv) = state.jinv.as_mut() {
        // M = Σ_α ∂σ_α ΔB^α + (∂b - Σ_α (∂σ_α)^2) Δt ;  J <- J - J M
        let mut m = model.drift_jacobian(&x_old) * dt;
        for (alpha, &dba) in db.iter().enumerate() {
            let ds = model.sigma_column_jacobian(&x_old, alpha);
            m += &ds * dba - (&ds * &ds) * dt;
        }
        let j = DMatrix::from_row_slice(d, d, jinv);
        let next = &j - &j * m;
        for i in 0..d {
            for k in 0..d {
                jinv[i * d + k] = next[(i, k)];
            }
        }
    }
    if layout.is_some() {
        let xj = state.jets.clone();
        for i in 0..d {
            let mut inc = model.drift[i].eval_generic(&xj).scale(dt);
            for (alpha, &dba) in db.iter().enumerate() {
                inc = inc.plus(&model.sigma[i * r + alpha].eval_generic(&xj).scale(dba));
            }
            state.jets[i] = xj[i].plus(&inc);
            state.x[i] = state.jets[i].value();
        }
    } else {
        for i in 0..d {
            let mut inc = model.drift[i].eval(&x_old) * dt;
            for (alpha, &dba) in db.iter().enumerate() {
                inc += model.sigma[i * r + alpha].eval(&x_old) * dba;
            }
            state.x[i] = x_old[i] + inc;
        }
    }
}
