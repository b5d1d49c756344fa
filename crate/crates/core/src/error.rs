use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("series centers differ ({0} vs {1})")]
    CenterMismatch(String, String),
    #[error("division by a series with zero constant term")]
    DivisionByZeroConstantTerm,
    #[error("composition out of domain: inner value {value} is {distance} from the outer center, outer radius {radius}")]
    CompositionOutOfDomain {
        value: String,
        distance: f64,
        radius: f64,
    },
    #[error("square root branch cut: constant term {0} has non-positive real part")]
    BranchCutViolation(String),
    #[error("series is not invertible: linear coefficient vanishes")]
    NonInvertibleSeries,

    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("invalid charts: {0}")]
    InvalidCharts(String),
    #[error("parameter {0} is outside the curve domain")]
    OutOfDomain(f64),
    #[error("conjugate jet series need a real chart center, got {0}")]
    ComplexCenterUnsupported(String),
    #[error("derivative order {requested} exceeds available order {available}")]
    OrderTooHigh { requested: usize, available: usize },

    #[error("jet outside the functional domain: {0}")]
    DomainViolation(String),
    #[error("functional series and pointwise evaluation disagree: {0}")]
    InconsistentFunctional(String),
    #[error("speed is not real positive: {0}")]
    NonPositiveSpeed(String),

    #[error("length value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("chart reversion failed at t = {0}")]
    ChartReversionFailed(f64),
    #[error("length integral does not converge: {0}")]
    DivergentLength(String),

    #[error("curve vanishes on its domain near t = {0}")]
    ZeroOnDomain(f64),
    #[error("curve is not analytic at infinity: {0}")]
    NotAnalyticAtInfinity(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidConfig(e.to_string())
    }
}
