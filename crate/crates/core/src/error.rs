use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("matrix is not Hermitian (max |M - M†| = {asymmetry:e}, allowed {allowed:e})")]
    NotHermitian { asymmetry: f64, allowed: f64 },

    #[error("eigen-decomposition did not converge")]
    NoConvergence,

    #[error("joint dimension {requested} exceeds the cap of {cap}")]
    DimensionOverflow { requested: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("transition amplitude vanishes at phi = {phi} (|amplitude| = {magnitude:e} < {tolerance:e})")]
    AmplitudeVanishes {
        phi: f64,
        magnitude: f64,
        tolerance: f64,
    },

    #[error("meter grid too narrow: edge amplitude ratio {edge_ratio:e} exceeds {limit:e}")]
    GridTooNarrow { edge_ratio: f64, limit: f64 },

    #[error("eigenvalue {eigenvalue} lies outside the pointer window (-{half_window}, {half_window}]")]
    AliasingDetected { eigenvalue: f64, half_window: f64 },

    #[error("uncertainty must be positive, got {0}")]
    NonPositiveUncertainty(f64),

    #[error("readout distribution carries no probability mass")]
    EmptyDistribution,

    #[error("W0 diverges: c_up + c_down = {0:e}")]
    DivergentW0(f64),

    #[error("coupling g must be positive for a pointer readout, got {0}")]
    InvalidCoupling(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
