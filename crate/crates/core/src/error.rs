use thiserror::Error;

/// Errors raised by the arithmetic and summation layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("element is not a unit")]
    NotAUnit,
    #[error("operands live in different rings")]
    IncompatibleRings,
    #[error("moduli are not coprime")]
    IncompatibleModuli,
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("logarithm series does not converge for this filtration index")]
    ConvergenceError,
    #[error("budget exceeded: {what} needs {needed}, budget {budget}")]
    BudgetExceeded { what: &'static str, needed: u128, budget: u128 },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("characteristic 2 is not supported here")]
    UnsupportedCharacteristic,
    #[error("rational function has a non-unit denominator at the evaluation point")]
    InvalidRationalFunction,
    #[error("no evaluation branch applies: {0}")]
    OutOfValidityRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("output: {msg}")]
    Io { kind: std::io::ErrorKind, msg: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io {
            kind: e.kind(),
            msg: e.to_string(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let kind = match e.kind() {
            csv::ErrorKind::Io(io) => io.kind(),
            _ => std::io::ErrorKind::InvalidData,
        };
        Error::Io {
            kind,
            msg: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
