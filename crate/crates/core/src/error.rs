use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("photon numbers ({n1}, {n2}) out of range for cutoff {dim}")]
    IndexOutOfRange { n1: usize, n2: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target {value} outside attainable range [{lo}, {hi}]")]
    UnattainableTarget { value: f64, lo: f64, hi: f64 },

    #[error("bisection did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("cutoff {dim} too small: weight {tail:e} beyond cutoff (need D >= {required})")]
    CutoffTooSmall { dim: usize, tail: f64, required: usize },

    #[error("trace leak {leak:e} at cutoff {dim} exceeds {limit:e}")]
    TraceLeak { dim: usize, leak: f64, limit: f64 },

    #[error("cutoff convergence failed: quantity moved by {delta:e} between D={dim} and D={dim_check}")]
    Convergence { dim: usize, dim_check: usize, delta: f64 },

    #[error("negativity increased along evolution; sampled profile (t, N): {profile:?}")]
    NonMonotone { profile: Vec<(f64, f64)> },

    #[error("first moments do not vanish (max |<a>| = {0:e})")]
    FirstMoments(f64),

    #[error("larger partially transposed symplectic eigenvalue {0} below 1/2")]
    GaussianRegime(f64),

    #[error("cannot parse {what}: offending token `{token}`")]
    Parse { what: &'static str, token: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the numerical cutoff/convergence policy rather than bad input.
    pub fn is_numerical_policy(&self) -> bool {
        matches!(
            self,
            Error::CutoffTooSmall { .. }
                | Error::TraceLeak { .. }
                | Error::Convergence { .. }
                | Error::NoConvergence(_)
                | Error::NonMonotone { .. }
        )
    }

    pub(crate) fn parse(what: &'static str, token: impl Into<String>) -> Self {
        Error::Parse { what, token: token.into() }
    }
}
