//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register capacity exceeded: layout needs {requested} qubits, cap is {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("matrix is not unitary within {tol:e}: deviation {dev:e}")]
    NotUnitary { dev: f64, tol: f64 },

    #[error("branch function is not injective: two branches collide on label {label}")]
    NotInjective { label: String },

    #[error("controls overlap the operation's targets")]
    ControlViolation,

    #[error("state norm drifted to {norm} (|norm-1| > {tol:e})")]
    NormDrift { norm: f64, tol: f64 },

    #[error("fixed-point overflow: {value} outside [{min}, {max}]")]
    Overflow { value: f64, min: f64, max: f64 },

    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),

    #[error("numerical integrity failure: {0}")]
    Integrity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
