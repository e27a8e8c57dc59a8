//! Stochastic flows `X(t, x, ω)` of Itô SDEs, their spatial derivatives and
//! inverse Jacobians, all driven by one Brownian path per ensemble.

pub mod driver;
pub mod model;
pub mod probes;
pub mod simulate;

pub use driver::BrownianDriver;
pub use model::CoefficientModel;
pub use probes::{flow_composition_check, inverse_jacobian_deviation, moment_probe, trajectory_csv};
pub use simulate::{simulate_flow, simulate_with_increments, FlowEnsemble, FlowOptions, PointState, Record, Snapshot};
