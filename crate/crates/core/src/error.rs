use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavelength {wavelength_nm:.3} nm outside dispersion validity range [{min_nm:.1}, {max_nm:.1}] nm")]
    OutOfValidityRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },
    #[error("no root inside the search window: {0}")]
    NoRootInWindow(String),
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after depth {depth}")]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        depth: usize,
    },
    #[error("coupling mismatch: {0}")]
    MismatchedCoupling(String),
    #[error("band centres violate energy conservation: residual {residual:e} rad/s exceeds {tolerance:e} rad/s")]
    BandsOffShell { residual: f64, tolerance: f64 },
    #[error("scenario requires a seed beam")]
    SeedMissing,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable name used in CLI error records.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OutOfValidityRange { .. } => "OutOfValidityRange",
            Error::NoRootInWindow(_) => "NoRootInWindow",
            Error::QuadratureNotConverged { .. } => "QuadratureNotConverged",
            Error::MismatchedCoupling(_) => "MismatchedCoupling",
            Error::BandsOffShell { .. } => "BandsOffShell",
            Error::SeedMissing => "SeedMissing",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}
