//! Dense complex linear algebra kernels: Hermitian and general eigenvalues,
//! singular values and determinants. Everything here is a pure function of
//! its input.

mod general;
mod hermitian;
mod householder;
mod matrix;
mod svd;

pub use general::{determinant, general_eigenvalues};
pub use hermitian::{herm_eigenvalues, MAX_SWEEPS_PER_EIGENVALUE};
pub use matrix::{CMatrix, HermMatrix, HERMITIAN_TOLERANCE};
pub use svd::{singular_values, smallest_singular_value};
