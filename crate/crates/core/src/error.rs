use thiserror::Error;

/// Failure of a single rounded arithmetic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent overflow")]
    Overflow,
    #[error("exponent underflow")]
    Underflow,
    #[error("invalid operation")]
    Invalid,
}

pub type BoxError = Box<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed decimal literal {0:?}")]
    Parse(String),
    #[error("decimal literal {0:?} is outside the exponent range")]
    Range(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("invalid precision: {0}")]
    Precision(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("system description, line {line}: {message}")]
    SystemDescription { line: usize, message: String },
    #[error("observer failed: {0}")]
    Observer(#[source] BoxError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
