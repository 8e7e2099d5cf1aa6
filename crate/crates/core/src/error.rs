use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands have different Hilbert layouts")]
    LayoutMismatch,
    #[error("tensor product of an empty list")]
    EmptyTensor,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("eigensolver did not converge")]
    NonConvergent,
    #[error("matrix is singular")]
    Singular,
    #[error("displacement is singular: effective mode frequency is zero")]
    SingularDisplacement,
    #[error("integration failed at t = {time:e} s: {reason}")]
    IntegrationFailure { time: f64, reason: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
