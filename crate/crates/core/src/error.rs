use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot project a (near) zero vector onto the manifold")]
    ZeroVector,
    #[error("transport step of length {0} exceeds the injectivity scale 0.5")]
    StepTooLarge(f64),
    #[error("the Euclidean manifold has infinite Riemannian volume")]
    UnboundedVolume,
    #[error("point is off the manifold by {0}")]
    OffManifold(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("numeric blow-up at step {step}: magnitude {magnitude}")]
    NumericBlowup { step: usize, magnitude: f64 },
    #[error("time grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid time window: {0}")]
    BadWindow(String),
    #[error("weight function integrates to {0}, too close to zero")]
    DegenerateWeight(f64),
    #[error("system `{0}` is not a gradient Brownian system")]
    NotGradientSystem(String),
    #[error("non-finite Monte Carlo sample")]
    NonFiniteSample,
    #[error("at least two samples are required, got {0}")]
    InsufficientData(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
