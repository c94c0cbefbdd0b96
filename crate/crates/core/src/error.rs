use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty point set")]
    EmptySet,

    #[error("point must lie in the open unit ball (|a| = {norm})")]
    PointNotInUnitBall { norm: f64 },

    #[error("balls do not intersect properly: {0}")]
    ImproperIntersection(String),

    #[error("input outside source wedge at stage {stage}")]
    OutsideSourceWedge { stage: String },

    #[error("invalid map parameter: {0}")]
    InvalidMap(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("chain geometry outside hypothesis bounds: {0}")]
    ChainGeometry(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate rasterization: inner and outer plates touch on the grid")]
    DegenerateRasterization,

    #[error("all {0} samples were excluded")]
    AllSamplesExcluded(usize),

    #[error("sense-reversing map: negative Jacobian determinant at {0:?}")]
    SenseReversed(Vec<f64>),

    #[error("non-generic target: {0}")]
    NonGenericTarget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
