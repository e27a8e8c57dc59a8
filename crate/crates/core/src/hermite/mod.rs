//! Hermite-function basis calculus on `R^d`.

pub mod basis;
pub mod delta;
pub mod functions;
pub mod ops;
pub mod series;

pub use basis::{Basis, BasisSpec};
pub use delta::{
    delta_coeffs, delta_norm_mehler, delta_norm_series, norm_row, norms_csv, DeltaNormSeries, MehlerQuadrature, NormRow,
};
pub use functions::hermite_functions_into;
pub use ops::{
    apply_derivative, hermite_eval, multiply_by_coordinate, multiply_by_function, reconstruct, transform,
    transform_samples, translate, translate_into, translation_matrix, translation_matrix_between,
};
pub use series::{sobolev_inner, sobolev_norm, HermiteSeries};
