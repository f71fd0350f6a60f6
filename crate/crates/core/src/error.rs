use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("signal not resolved on its window: tail mass {tail:.3e} exceeds {limit:.3e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("symbol is not finite at frequency {xi}")]
    Symbol { xi: f64 },

    #[error("result is not resolved: {fraction:.3e} of the energy sits above 0.9 Nyquist")]
    Regularity { fraction: f64 },

    #[error("material law: {0}")]
    Material(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("well-posedness condition {condition} failed: estimate {value:.6e} is not positive")]
    WellPosedness { condition: String, value: f64 },

    #[error("not applicable: {0}")]
    Applicability(String),

    #[error("kernel is not admissible: {0}")]
    Admissibility(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("level {level}: {source}")]
    Level { level: usize, source: Box<Error> },
}
