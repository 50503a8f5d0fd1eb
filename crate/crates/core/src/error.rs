use thiserror::Error;

use crate::region::Region;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("region mismatch: {left} vs {right}")]
    RegionMismatch { left: Region, right: Region },

    #[error("region {inner} is not contained in {outer}")]
    NotContained { inner: Region, outer: Region },

    #[error("Hilbert space dimension {dim} exceeds the cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("not a projector: {0}")]
    NotProjector(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("no translate of the interaction range fits inside {0}")]
    NoTranslate(Region),

    #[error("window families differ")]
    WindowMismatch,

    #[error("window {0} is not stored")]
    MissingWindow(Region),

    #[error("injectivity length not found up to n = {0}")]
    InjectivityNotFound(usize),

    #[error("projector on {0} has an empty kernel")]
    EmptyKernel(Region),

    #[error("inconsistent marginals: {inner} inside {outer} off by {residual:.3e}")]
    MarginalInconsistent { inner: Region, outer: Region, residual: f64 },

    #[error("frustration-freeness violated: {0}")]
    FfViolation(String),

    #[error("region {0} has an empty physical boundary")]
    EmptyBoundary(Region),

    #[error("config: {0}")]
    Config(String),

    #[error("I/O on {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
