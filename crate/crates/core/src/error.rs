use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("collocation nodes must be distinct and increasing (index {index})")]
    DuplicateNodes { index: usize },

    #[error("stage iteration did not converge{} after {iterations} iterations (residual {residual:e})",
        .step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NonConvergence {
        step: Option<usize>,
        iterations: usize,
        residual: f64,
    },

    #[error("Newton iteration for Legendre roots failed to converge (degree {0})")]
    LegendreNonConvergence(usize),

    #[error("stability function has a pole at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("problem `{0}` has no exact solution")]
    MissingExactSolution(String),

    #[error("errors at the rounding floor ({0:e}); refine the step counts")]
    RoundingFloor(f64),

    #[error(
        "root certification failed for s = {s} at {bits} bits: min_re {min_re} vs {min_re_doubled} at doubled precision"
    )]
    RootCertificationFailure {
        s: usize,
        bits: u32,
        min_re: f64,
        min_re_doubled: f64,
    },

    #[error("parse error at byte {offset}: expected {expected}")]
    Parse { offset: usize, expected: String },

    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::LegendreNonConvergence(_)
                | Error::Pole { .. }
                | Error::RoundingFloor(_)
                | Error::RootCertificationFailure { .. }
        )
    }
}
