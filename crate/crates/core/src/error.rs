use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution has no atom with positive mass")]
    EmptyDistribution,
    #[error("masses sum to {sum}, which deviates from 1 by more than 1e-9")]
    MassNotNormalized { sum: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFiniteValue(String),
    #[error("negative mass {0}")]
    NegativeMass(f64),
    #[error("level {name} = {value} is outside its admissible range")]
    InvalidLevel { name: &'static str, value: f64 },
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("exponent {0} must be at least 1")]
    InvalidExponent(f64),
    #[error("action {0} lies outside the action domain")]
    ActionOutOfDomain(f64),
    #[error("expected loss is not order-sensitive around the minimizer: {0}")]
    ShapeViolation(String),
    #[error("no sign change of the expected-loss slope found inside the action domain")]
    Unbracketed,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series contains an infinite score")]
    InfiniteScore,
    #[error("series too short: {0} entries")]
    DegenerateSeries(usize),
    #[error("unknown partition '{0}'")]
    UnknownPartition(String),
    #[error("invalid prediction space: {0}")]
    InvalidSpace(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Schema(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    /// Stable machine-readable identifier used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyDistribution => "EmptyDistribution",
            Error::MassNotNormalized { .. } => "MassNotNormalized",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::NegativeMass(_) => "NegativeMass",
            Error::InvalidLevel { .. } => "InvalidLevel",
            Error::InvalidWeight(_) => "InvalidWeight",
            Error::InvalidExponent(_) => "InvalidExponent",
            Error::ActionOutOfDomain(_) => "ActionOutOfDomain",
            Error::ShapeViolation(_) => "ShapeViolation",
            Error::Unbracketed => "Unbracketed",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::InfiniteScore => "InfiniteScore",
            Error::DegenerateSeries(_) => "DegenerateSeries",
            Error::UnknownPartition(_) => "UnknownPartition",
            Error::InvalidSpace(_) => "InvalidSpace",
            Error::InvalidKernel(_) => "InvalidKernel",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Schema(_) => "SchemaError",
            Error::Parse { .. } => "ParseError",
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_level(name: &'static str, value: f64, lo_open: bool, hi_open: bool) -> Result<()> {
    let lo_ok = if lo_open { value > 0.0 } else { value >= 0.0 };
    let hi_ok = if hi_open { value < 1.0 } else { value <= 1.0 };
    if value.is_finite() && lo_ok && hi_ok {
        Ok(())
    } else {
        Err(Error::InvalidLevel { name, value })
    }
}
