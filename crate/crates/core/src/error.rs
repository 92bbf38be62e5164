use thiserror::Error;

/// Errors raised by the numerical kernels and the physics modules built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("matrix is singular (relative pivot {pivot:.3e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steady state is not unique: {0}")]
    DegenerateSteadyState(String),

    #[error("density-matrix invariant violated: {0}")]
    InvariantViolation(String),

    #[error("analytic denominator vanishes (|F| = {0:.3e})")]
    SingularDenominator(f64),

    #[error("insufficient grid resolution: {0}")]
    InsufficientResolution(String),

    #[error("spectral window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("harmonic basis too small: lowest levels moved by {shift:.3e} GHz going from {size} to {larger} states")]
    BasisTooSmall { size: usize, larger: usize, shift: f64 },

    #[error("t12 - t23 does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("at delta13 = {delta13}: {source}")]
    AtDetuning {
        delta13: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at flux = {flux}: {source}")]
    AtFlux {
        flux: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips sweep-point context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtDetuning { source, .. } | Error::AtFlux { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
