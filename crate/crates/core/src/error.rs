use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("non-finite entry at {location}")]
    NonFiniteEntry { location: String },

    #[error("Gram matrix is numerically singular (pivot ratio {ratio:e})")]
    SingularGram { ratio: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance is not full row rank (numeric rank {rank}, m = {m})")]
    RankDeficient { rank: usize, m: usize },

    #[error("no relative interior: primal residual stalled at {residual:e}")]
    NoInterior { residual: f64 },

    #[error("polytope is possibly unbounded: |x|_inf reached {norm:e}")]
    PossiblyUnbounded { norm: f64 },

    #[error("no convergence after {iterations} iterations")]
    MaxIterations { iterations: usize },

    #[error("unbalanced margins: row sum {row_sum} != column sum {col_sum}")]
    UnbalancedMargins { row_sum: f64, col_sum: f64 },

    #[error("dimension {dim} exceeds the exact-volume cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("region is unbounded along a chart direction")]
    Unbounded,

    #[error("no Monte Carlo sample landed inside the polytope")]
    ZeroAcceptance,
}

impl Error {
    /// Stable kebab-case identifier used in structured error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse-error",
            Error::NonFiniteEntry { .. } => "non-finite-entry",
            Error::SingularGram { .. } => "singular-gram",
            Error::Domain(_) => "domain-error",
            Error::Precondition(_) => "precondition",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::NoInterior { .. } => "no-interior",
            Error::PossiblyUnbounded { .. } => "possibly-unbounded",
            Error::MaxIterations { .. } => "max-iterations",
            Error::UnbalancedMargins { .. } => "unbalanced-margins",
            Error::DimensionTooLarge { .. } => "dimension-too-large",
            Error::NumericalDegeneracy(_) => "numerical-degeneracy",
            Error::Unbounded => "unbounded",
            Error::ZeroAcceptance => "zero-acceptance",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
