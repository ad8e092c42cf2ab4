use thiserror::Error;

/// Errors produced anywhere in the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("qubit {0} appears twice in one term")]
    DuplicateQubit(usize),

    #[error("{what} needs n <= {limit}, got n = {n}")]
    DenseLimit { what: &'static str, n: usize, limit: usize },

    #[error("zero amplitude at basis index {0}")]
    ZeroAmplitude(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular or the solve did not converge (relative residual {0:e})")]
    Singular(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
