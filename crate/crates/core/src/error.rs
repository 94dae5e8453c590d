use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numeric kernel, the state builders and the measures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("trace is {trace:.3e}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("amplitudes are not normalized (sum of |a|^2 = {norm})")]
    NotNormalized { norm: f64 },

    #[error("eps out of [0,1]: {0}")]
    EpsilonOutOfRange(f64),

    #[error("{name} out of [0,1]: {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("{0} is not a finite number")]
    NonFinite(&'static str),

    #[error("coherence undefined for unpopulated site {site}")]
    UnpopulatedSite { site: usize },

    #[error("site index {index} invalid for a {n_sites}-site state")]
    InvalidSite { index: usize, n_sites: usize },

    #[error("coherence needs two distinct sites, got {0} twice")]
    SameSite(usize),

    #[error("operation requires a two-site state, got {0} sites")]
    NotTwoSites(usize),

    #[error("state needs at least one site")]
    Empty,

    #[error("invalid scenario map: {0}")]
    InvalidMap(String),
}
