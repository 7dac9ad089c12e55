use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration failed at t = {last_time}: {reason}")]
    IntegrationFailure { last_time: f64, reason: String },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("region construction failed: {0}")]
    Construction(String),

    #[error("inconsistent result: {0}")]
    Inconsistency(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("aliasing: collocation grid {grid} is smaller than the dealiased minimum {required}")]
    Aliasing { grid: usize, required: usize },

    #[error("unstable time stepping at t = {time}: energy grew by a factor {growth}")]
    Stability { time: f64, growth: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations (best Ritz value {value}, residual {residual})"
    )]
    Eigensolver { iterations: usize, value: f64, residual: f64, vector: Vec<Complex64> },

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual}, lambda_min estimate {lambda_min_estimate})")]
    IllConditioned { iterations: usize, residual: f64, lambda_min_estimate: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}

pub(crate) fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {values:?}")))
    }
}
