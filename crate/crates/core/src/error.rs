//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction ({x}, {y}, {z}) is not a unit vector (norm {norm})")]
    InvalidDirection { x: f64, y: f64, z: f64, norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {dim}: only 1-3 spin-1/2 factors (dim 2, 4, 8) are handled")]
    UnsupportedDimension { dim: usize },

    #[error("slot {slot} out of range for {parties} parties")]
    SlotOutOfRange { slot: usize, parties: usize },

    #[error("operator is not hermitian (max |M - M\u{2020}| entry = {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("operator is not a projector (hermiticity dev {hermitian_dev:.3e}, idempotency dev {idempotent_dev:.3e})")]
    NotAProjector {
        hermitian_dev: f64,
        idempotent_dev: f64,
    },

    #[error("zero-probability branch: outcome probability {prob:.3e} below threshold")]
    ZeroProbabilityBranch { prob: f64 },

    #[error("state is not the expected product form (deviation {deviation:.3e})")]
    NotProductForm { deviation: f64 },

    #[error("invalid Bell label component {value}: must be +1 or -1")]
    InvalidBellLabel { value: i32 },

    #[error("integration aborted: integrand returned non-finite value {value} at ({x}, {y}, {z})")]
    IntegrationAbort { value: f64, x: f64, y: f64, z: f64 },

    #[error("scheme not supported for this integral: {reason}")]
    UnsupportedScheme { reason: String },

    #[error("two-particle density is not interchange-symmetric (max |\u{3c1}(a,b)-\u{3c1}(b,a)| = {max_violation:.3e})")]
    AsymmetricDensity { max_violation: f64 },

    #[error("candidate density is not normalized: total mass {mass:.6} (expected 1)")]
    UnnormalizedDensity { mass: f64 },

    #[error("response function out of range: {what} evaluated to {value} at ({x}, {y}, {z})")]
    ResponseRange {
        what: String,
        value: f64,
        x: f64,
        y: f64,
        z: f64,
    },

    #[error("candidate model file: {0}")]
    ModelFile(#[from] crate::model_file::ModelFileError),
}
