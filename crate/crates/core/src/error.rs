use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate in point")]
    NonFinite,
    #[error("gradient overflow at {point:?}")]
    FieldOverflow { point: Vec<f64> },
    #[error("field returned an empty sample at {point:?}")]
    EmptyFieldSample { point: Vec<f64> },
    #[error("{what} evaluated to NaN at {point:?}")]
    NanValue { what: String, point: Vec<f64> },
    #[error("function is not differentiable at {point:?}")]
    UnsupportedPoint { point: Vec<f64> },
    #[error("region sampling failed: {0}")]
    Region(String),
    #[error("horizon error: {0}")]
    Horizon(String),
    #[error("dimension {0} too large for grid sampling; request random-only mode")]
    Dimensionality(usize),
    #[error("matrix is not orthogonal: |UᵀU - I| = {residual:e}")]
    NotOrthogonal { residual: f64 },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
