use thiserror::Error;

use crate::grid::Field;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Iteration history carried by a failed solve so callers can still report it.
#[derive(Debug, Clone, Default)]
pub struct History {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub m_factors: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("kernel is singular at ({x}, {y})")]
    Singularity { x: f64, y: f64 },

    #[error("quadrature did not reach tolerance: best estimate {estimate:e}, error estimate {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("no positive Nehari scaling exists: int u f(u) = {0:e}")]
    NoScaling(f64),

    #[error("residual undefined for a field with no x-dependent content")]
    UndefinedResidual,

    #[error("degenerate field: {0}")]
    Degenerate(String),

    #[error("no convergence after {} iterations (last residual {:e})", .history.iterations, .history.residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        history: History,
        last: Box<Field>,
    },

    #[error("iteration collapsed at step {iteration}: normalization factor {m_factor:e} is not positive")]
    Collapse {
        iteration: usize,
        m_factor: f64,
        history: History,
    },

    #[error("tail fit window too far out: only {kept} samples above the noise floor")]
    Underflow { kept: usize },

    #[error("non-finite state at t = {time} (step {step})")]
    BlowUp {
        step: usize,
        time: f64,
        last_good: Box<Field>,
    },

    #[error("corrupt field file: {0}")]
    CorruptFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::Config { .. }
                | Error::Degenerate(_)
                | Error::UndefinedResidual
                | Error::CorruptFile(_)
                | Error::Json(_)
                | Error::NoScaling(_)
        )
    }
}
