use thiserror::Error;

/// Unified error type for the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("non-finite input at ({0}, {1}, {2})")]
    NonFiniteInput(f64, f64, f64),

    #[error("evaluation overflow: network produced a non-finite value")]
    EvaluationOverflow,

    #[error("empty sample: requested {0} points")]
    EmptySample(usize),

    #[error("point ({0}, {1}) lies outside the domain")]
    OutOfDomain(f64, f64),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("insufficient derivative order: {0}")]
    InsufficientDerivativeOrder(String),

    #[error("boundary point carries no targets")]
    EmptyTarget,

    #[error("degenerate loss: {0}")]
    DegenerateLoss(String),

    #[error("optimizer step rejected: {0}")]
    StepRejected(String),

    #[error("not a descent direction (directional derivative {0} >= 0)")]
    NotADescentDirection(f64),

    #[error("interface lists inconsistent between subdomains {0} and {1}")]
    InterfaceMismatch(usize, usize),

    #[error("checkpoint incompatible: {0}")]
    CheckpointIncompatible(String),

    #[error("checkpoint parse error at line {line}: {message}")]
    CheckpointParse { line: usize, message: String },

    #[error("training diverged at iteration {iteration}: loss became non-finite")]
    Diverged { iteration: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
