use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent input parameters.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A numerical invariant was violated beyond tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A projection was requested onto an outcome of (numerically) zero probability.
    #[error("degenerate outcome at site {site}: occupation {occupation:.3e}")]
    DegenerateOutcome { site: usize, occupation: f64 },

    /// The correlation matrix drifted away from a pure Gaussian state.
    #[error("purity defect {defect:.3e} exceeds abort threshold")]
    Purity { defect: f64 },

    /// Exact-diagonalization request beyond the supported Hilbert-space size.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("fit error: {0}")]
    Fit(String),

    /// An exact-diagonalization cross-check disagreed with the Gaussian route.
    #[error("oracle mismatch: {0}")]
    Oracle(String),

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
