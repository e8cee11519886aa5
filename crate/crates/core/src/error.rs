use crate::space::MeasureEstimate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A document failed schema validation. `path` names the offending field.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    /// A parameter is outside the range in which the computation is defined.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown measure id `{0}`")]
    UnknownMeasure(String),

    #[error("region is empty or cannot be sampled: {0}")]
    EmptyRegion(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("degenerate measure: ball B({center:?}, {radius:e}) has zero measure")]
    DegenerateMeasure { center: Vec<f64>, radius: f64 },

    #[error("Monte Carlo budget of {budget} samples exhausted; best estimate {best:?}")]
    BudgetExceeded { budget: u64, best: Box<MeasureEstimate> },

    #[error("exponent fit failed: {0}")]
    FitFailure(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("empty ball: no grid nodes inside B({center:?}, {radius:e})")]
    EmptyBall { center: Vec<f64>, radius: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMeasure { .. }
                | Error::BudgetExceeded { .. }
                | Error::FitFailure(_)
                | Error::EmptyBall { .. }
        )
    }
}
