use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the pricing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {best_value:.6e})")]
    NotConverged {
        iterations: usize,
        best_value: f64,
        best_point: Vec<f64>,
    },

    #[error("node ordering violated after optimization: {0:?}")]
    NodeOrder(Vec<f64>),

    #[error("residual small-jump variance is negative ({sigma2:.6e}) at cutoff {cutoff}")]
    NegativeVariance { sigma2: f64, cutoff: f64 },

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("risk-neutral moment explodes: positive jump rate {rate} <= 1")]
    MomentExplodes { rate: f64 },

    #[error("characteristic exponent evaluated at a pole s = {0}")]
    Pole(Complex64),

    #[error("root finding failed: {0}")]
    Roots(String),

    #[error("repeated root near {0}")]
    RepeatedRoot(Complex64),

    #[error(
        "root count mismatch: expected {expected} roots with positive real part, found {found}"
    )]
    RootCount { expected: usize, found: usize },

    #[error("non-finite value in numerical inversion at t = {0}")]
    Inversion(f64),

    #[error("survival curve not monotone at day {day}: violation {violation:.3e}")]
    Monotonicity { day: usize, violation: f64 },

    #[error("degenerate contract: {0}")]
    Degenerate(String),

    #[error("quote {index} violates arbitrage bounds: {reason}")]
    Arbitrage { index: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by bad configuration or input files rather than
    /// numerical breakdown.
    pub fn is_config_error(&self) -> bool {
        if let Error::Stage { source, .. } = self {
            return source.is_config_error();
        }
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Arbitrage { .. }
                | Error::MomentExplodes { .. }
        )
    }
}

/// Tags errors from one pipeline stage with the stage name.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
