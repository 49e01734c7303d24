use alloc::string::String;

/// Errors raised by the core. The variant name is what the command line prints
/// on failure, so names are part of the interface.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("axis {axis} out of range for rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("forward cache does not match the current layer state")]
    StaleCache,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("only one class present in labels")]
    SingleClass,
    #[error("invalid label {0}; expected 0 or 1")]
    InvalidLabel(u8),
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("normalization leakage: {0}")]
    Leakage(String),
    #[error("feature count mismatch: model expects {expected}, data has {found}")]
    FeatureCountMismatch { expected: usize, found: usize },
    #[error("malformed weights: {0}")]
    MalformedWeights(String),
}

impl Error {
    /// Variant name, e.g. `"ShapeMismatch"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::AxisOutOfRange { .. } => "AxisOutOfRange",
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::StaleCache => "StaleCache",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyInput(_) => "EmptyInput",
            Error::EmptyDataset => "EmptyDataset",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::SingleClass => "SingleClass",
            Error::InvalidLabel(_) => "InvalidLabel",
            Error::InvalidScore(_) => "InvalidScore",
            Error::Leakage(_) => "Leakage",
            Error::FeatureCountMismatch { .. } => "FeatureCountMismatch",
            Error::MalformedWeights(_) => "MalformedWeights",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::error::Error::ShapeMismatch(alloc::format!($($arg)*))
    };
}
pub(crate) use shape_err;
