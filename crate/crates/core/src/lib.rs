//! Spectra of sums of independent Haar unitary and orthogonal matrices:
//! dense eigen/singular kernels, Haar samplers, the closed-form densities of
//! the limiting laws, a free-convolution engine for their Stieltjes
//! transforms and the Brown measure reconstruction.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brown_girko;
pub mod cli;
pub mod closed_forms;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod ortho_weyl;
pub mod quad;
pub mod schwinger_dyson;
pub mod singular_stats;
pub mod svg;

pub use error::{Error, Result};
