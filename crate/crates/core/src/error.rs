use core::fmt;

/// Errors raised by the numeric core, critics, explorer and environments.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension, shape or hyperparameter is inconsistent.
    Config(&'static str, usize, usize),
    /// A hyperparameter lies outside its admissible range.
    OutOfRange(&'static str, f64),
    /// The caller supplied arguments that violate an operation's contract.
    Usage(&'static str),
    /// The environment failed while stepping.
    Environment(&'static str),
    /// A computation produced a non-finite value.
    NonFinite(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(what, expected, got) => {
                write!(f, "{what}: expected {expected}, got {got}")
            }
            Error::OutOfRange(what, value) => write!(f, "{what} out of range: {value}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Environment(msg) => write!(f, "environment fault: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
