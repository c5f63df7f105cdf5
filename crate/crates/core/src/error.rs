use alloc::string::String;

/// Errors produced by channel generation, the solver and the cost model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what}: expected {expected:?}, found {found:?}")]
    DimensionMismatch { what: &'static str, expected: (usize, usize), found: (usize, usize) },

    #[error("link distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("water-filling needs at least one nonzero singular value")]
    NoUsableStream,

    #[error("phase vector entry {index} has modulus {modulus}")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("iteration {iteration}: {what} (value {value:e})")]
    InvariantViolated { iteration: usize, what: &'static str, value: f64 },

    #[error("cost model for {method} needs `{parameter}`")]
    MissingParameter { method: &'static str, parameter: &'static str },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
