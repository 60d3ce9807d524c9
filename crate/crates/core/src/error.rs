use thiserror::Error;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is numerically singular (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("quadrature did not converge (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    QuadratureNotConverged { achieved: f64, wanted: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("root finding failed: {0}")]
    RootNotBracketed(String),

    #[error("all eigenvalues fall below the spectral floor")]
    ZeroState,

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures that stem from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotPositiveDefinite
                | Error::QuadratureNotConverged { .. }
                | Error::DegenerateGeometry(_)
                | Error::RootNotBracketed(_)
                | Error::ZeroState
                | Error::RankDeficient
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
