use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-integrable kernel tail: {0}")]
    NonIntegrableTail(String),
    #[error("integral does not stabilize: {0}")]
    DivergentIntegral(String),
    #[error("series diverges: (alpha - k) * p = {0} >= -1")]
    DivergentSeries(f64),
    #[error("moment E|Z|^{p} diverges for beta = {beta}")]
    DivergentMoment { beta: f64, p: f64 },
    #[error("driver path carries no exact jump list")]
    MissingJumpList,
    #[error("time {t} outside simulated window [{start}, {end}]")]
    OutOfWindow { t: f64, start: f64, end: f64 },
    #[error("insufficient window: {0}")]
    InsufficientWindow(String),
    #[error("input too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("critical regime: {0}")]
    CriticalRegime(String),
    #[error("power variation is zero (degenerate path)")]
    ZeroVariation,
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("quadrature did not converge: {0}")]
    NotConverged(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) | Error::InvalidParameter(_) | Error::Parse(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
