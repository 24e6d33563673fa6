use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error(
        "matrix is not Hermitian: |A[{row}][{col}] - conj(A[{col}][{row}])| = {deviation:e} exceeds {tolerance:e}"
    )]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
        tolerance: f64,
    },

    #[error(
        "eigenvalue iteration did not converge after {iterations} iterations ({remaining} eigenvalues unresolved)"
    )]
    NoConvergence { iterations: usize, remaining: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measure is invalid: {0}")]
    InvalidMeasure(String),

    #[error("logarithmic moment diverges: atom of mass {mass} at the origin")]
    LogMomentInfinite { mass: f64 },

    #[error("r = 0 is the atomic case (single atom at x = 1); no density exists")]
    AtomicCase,

    #[error("d = 1 Brown measure is the uniform law on the unit circle; it has no planar density")]
    UnitCircleCase,

    #[error("Stieltjes transform requires Im z > 0, got z = {0}")]
    NotUpperHalfPlane(Complex64),

    #[error("fixed point did not converge at z = {z}: residual {residual:e}")]
    FixedPointNoConvergence { z: Complex64, residual: f64 },

    #[error("square-root branch is ambiguous at z = {z}")]
    BranchAmbiguity { z: Complex64 },

    #[error("density renormalization factor {factor} lies outside [0.98, 1.02]")]
    Renormalization { factor: f64 },

    #[error("radius {r} lies within {margin} of the exceptional radius {exceptional}")]
    ExceptionalRadius { r: f64, exceptional: f64, margin: f64 },

    #[error("quadrature did not converge: successive estimates differ by {difference:e}")]
    QuadratureNoConvergence { difference: f64 },
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::FixedPointNoConvergence { .. }
                | Error::BranchAmbiguity { .. }
                | Error::Renormalization { .. }
                | Error::QuadratureNoConvergence { .. }
                | Error::LogMomentInfinite { .. }
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
