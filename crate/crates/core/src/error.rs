use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Hurst index outside the admissible open interval.
    InvalidHurst(f64),
    NegativeTime(f64),
    InvalidStepFunction(String),
    InvalidArgument(String),
    /// Brute-force pairing enumeration refused: the order exceeds the cap.
    OrderTooLarge {
        order: u32,
        cap: u32,
    },
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    NotPositiveSemidefinite(String),
    /// Euler state became NaN or infinite.
    NonFiniteState {
        step: usize,
    },
    UnknownModel {
        name: String,
        available: alloc::vec::Vec<String>,
    },
    DegenerateVariance {
        path: usize,
        value: f64,
    },
    EmptyEnsemble,
    Divergent(String),
    ToleranceUnreachable {
        tol: f64,
        achieved: f64,
    },
    OracleMismatch(String),
    InconsistentAnnotation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidHurst(h) => write!(f, "Hurst index {h} outside (1/2, 1)"),
            Error::NegativeTime(t) => write!(f, "negative time {t}"),
            Error::InvalidStepFunction(msg) => write!(f, "invalid step function: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::OrderTooLarge { order, cap } => write!(
                f,
                "total chaos order {order} exceeds the pairing-enumeration cap {cap}; \
                 use the symbolic product formula instead"
            ),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotPositiveSemidefinite(msg) => write!(f, "matrix not positive semidefinite: {msg}"),
            Error::NonFiniteState { step } => write!(f, "non-finite state at Euler step {step}"),
            Error::UnknownModel { name, available } => {
                write!(f, "unknown model `{name}`; available: {}", available.join(", "))
            }
            Error::DegenerateVariance { path, value } => {
                write!(f, "path {path}: asymptotic variance {value} is not positive")
            }
            Error::EmptyEnsemble => write!(f, "expansion ensemble is empty"),
            Error::Divergent(msg) => write!(f, "divergent sum: {msg}"),
            Error::ToleranceUnreachable { tol, achieved } => {
                write!(f, "tail tolerance {tol:e} unreachable within the truncation cap (best {achieved:e})")
            }
            Error::OracleMismatch(msg) => write!(f, "oracle mismatch: {msg}"),
            Error::InconsistentAnnotation(msg) => write!(f, "inconsistent graph annotation: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
