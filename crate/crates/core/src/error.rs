use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state violates the uncertainty relations: {0}")]
    NonPhysical(String),
    #[error("chart is singular: {0}")]
    Singularity(String),
    #[error("outside the chart domain: {0}")]
    Domain(String),
    #[error("uncertainty invariant below hbar^2/4: {0}")]
    Uncertainty(String),
    #[error("covariance does not describe a pure Gaussian: {0}")]
    InvalidGaussian(String),
    #[error("matrix is singular: {0}")]
    SingularMatrix(String),
    #[error("position lies on or inside the horizon: {0}")]
    Horizon(String),
    #[error("mass shell has no real root: {0}")]
    NoRoot(String),
    #[error("constraint drift exceeded tolerance: {0}")]
    ConstraintViolation(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("proper time radicand is negative: {0}")]
    Imaginary(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPhysical(_) => "non_physical",
            Error::Singularity(_) => "singularity",
            Error::Domain(_) => "domain",
            Error::Uncertainty(_) => "uncertainty",
            Error::InvalidGaussian(_) => "invalid_gaussian",
            Error::SingularMatrix(_) => "singular_matrix",
            Error::Horizon(_) => "horizon",
            Error::NoRoot(_) => "no_root",
            Error::ConstraintViolation(_) => "constraint_violation",
            Error::Integration(_) => "integration",
            Error::Imaginary(_) => "imaginary",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
