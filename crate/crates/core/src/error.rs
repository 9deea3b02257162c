use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("operation not supported for this configuration: {0}")]
    Unsupported(String),

    #[error("disorder vector rejected: {0}")]
    InvalidDisorder(String),

    #[error("critical disorder strength undefined: {0}")]
    UndefinedCritical(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("exceptional point: biorthogonal pair {index} is self-orthogonal (|<chi|phi>| / (|chi||phi|) = {ratio:e})")]
    Defective { index: usize, ratio: f64 },

    #[error("rapidity pairing failed: eigenvalue {index} has no -beta partner within {tol:e}")]
    Pairing { index: usize, tol: f64 },

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("bands are gapless along the loop (k = {k:.6}, gap = {gap:e})")]
    Gapless { k: f64, gap: f64 },

    #[error("exceptional point inside the Brillouin zone near k = {k:.6}")]
    ExceptionalPoint { k: f64 },

    #[error("band tracking lost continuity at k = {k:.6}; refine N_k")]
    Discontinuous { k: f64 },

    #[error("dimension guard: {0}")]
    SizeGuard(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
