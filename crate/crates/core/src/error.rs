use thiserror::Error;

/// Every failure the library reports.
///
/// Variants carry a human-readable context string; the CLI maps them onto
/// exit codes and machine-readable error records.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("degenerate torus: {0}")]
    DegenerateTorus(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("ODE integration failed: {0}")]
    IntegrationFailure(String),
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("matrix too large: {0}")]
    SizeLimit(String),
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("symbol grids differ: {0}")]
    GridMismatch(String),
    #[error("sampled function is not convex: {0}")]
    NotConvex(String),
    #[error("basis truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("scan too coarse: {0}")]
    ScanTooCoarse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in serialized error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::DomainError(_) => "DomainError",
            Error::DegenerateTorus(_) => "DegenerateTorus",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::IntegrationFailure(_) => "IntegrationFailure",
            Error::RootNotBracketed(_) => "RootNotBracketed",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::SizeLimit(_) => "SizeLimit",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::GridMismatch(_) => "GridMismatch",
            Error::NotConvex(_) => "NotConvex",
            Error::TruncationTooSmall(_) => "TruncationTooSmall",
            Error::DegenerateFit(_) => "DegenerateFit",
            Error::ScanTooCoarse(_) => "ScanTooCoarse",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
