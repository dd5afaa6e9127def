use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BvpError {
    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("solution blew up at t = {0}")]
    BlowUp(f64),
    #[error("trajectory never reaches y = {0}")]
    NoCrossing(f64),
    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("root not bracketed: f({a}) and f({b}) have the same sign")]
    NotBracketed { a: f64, b: f64 },
    #[error("branch {0} does not exist at epsilon = {1}")]
    NoBranch(String, f64),
    #[error("{0}")]
    InvalidBranch(&'static str),
    #[error("pitchfork fit failed: {0}")]
    Fit(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, BvpError>;

impl From<std::io::Error> for BvpError {
    fn from(e: std::io::Error) -> Self {
        BvpError::Io(e.to_string())
    }
}
