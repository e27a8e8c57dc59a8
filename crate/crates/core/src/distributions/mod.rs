//! Compactly supported distributions, the chain-rule expansion, the adjoint
//! flow `Y_t` and the adjoint generator matrices.

pub mod chain_rule;
pub mod compact;
pub mod duality;
pub mod galerkin;
pub mod pushforward;
pub mod spde;

pub use chain_rule::{faa_di_bruno, ChainRuleExpansion, ChainRulePolynomials};
pub use compact::{legendre_grid, Atom, CompactDistribution, DensityTerm, NamedDensity, PolyGaussian, SupportBox};
pub use duality::{duality_check, DualityReport};
pub use galerkin::{adjoint_apply, forward_galerkin, AdjointGalerkin, AdjointOp};
pub use pushforward::{pushforward, pushforward_pairing};
pub use spde::{residual_csv, spde_residual, ResidualPath};
