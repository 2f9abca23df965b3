//! Dense matrix/vector arithmetic, deterministic seeded RNG, and
//! finite-difference utilities.

mod diff;
mod matrix;
mod rng;
pub(crate) mod simd;

pub use diff::central_diff;
pub use matrix::Matrix;
pub use rng::Rng;

use thiserror::Error;

/// Default number of power iterations for [`Matrix::spectral_norm`].
pub const DEFAULT_POWER_ITERS: usize = 200;
/// Default convergence tolerance for [`Matrix::spectral_norm`].
pub const DEFAULT_POWER_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite value produced in {context}")]
    NonFinite { context: &'static str },
}
