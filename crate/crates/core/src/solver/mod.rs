//! Forward-equation solvers and the checks built on them.

pub mod galerkin;
pub mod kernel;
pub mod mc;
pub mod monotonicity;
pub mod semigroup;

pub use galerkin::{solve_forward_galerkin, step_ladder, Checkpoint, GalerkinPath, StepLadder};
pub use kernel::{
    check_symmetry, check_translation, estimate_kernel, gaussian_kde, superposition_check, KernelEstimate,
    KernelOptions, SuperpositionReport, SymmetryReport, TranslationOptions, TranslationReport,
};
pub use mc::{ensemble_moments, martingale_term_mc, solve_forward_mc, EnsembleMoments, McOptions, SolveReport};
pub use monotonicity::{check_monotonicity, monotonicity_constant, MonotonicityReport};
pub use semigroup::{semigroup_bound, semigroup_q_bound, SemigroupOptions, SemigroupReport};

/// Margin above the `d/4 + N/2` threshold used when `p` is not given.
pub const P_MARGIN: f64 = 0.25;

/// Default `p = d/4 + N/2 + 1/4` for a distribution of order `N`.
pub fn default_p(d: usize, order: usize) -> f64 {
    d as f64 / 4.0 + order as f64 / 2.0 + P_MARGIN
}

/// Default `q = [p] + 3`.
pub fn default_q(p: f64) -> f64 {
    p.floor() + 3.0
}
