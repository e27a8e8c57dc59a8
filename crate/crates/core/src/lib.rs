//! Stochastic-flow representation of forward (Fokker-Planck) equations in
//! Hermite-Sobolev spaces.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod field;
pub mod flow;
pub mod hermite;
pub mod jet;
pub mod multi_index;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use multi_index::MultiIndex;
