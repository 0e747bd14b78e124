//! Error type shared by all library modules.

use thiserror::Error;

/// Errors produced by kernel, target, schedule, engine, and diagnostics
/// operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two points (or a point and a target) disagree on dimensionality.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An input value was NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// A constructor or operation received an out-of-domain parameter.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An operation needs more samples than it was given.
    #[error("{what} requires at least {min} points, got {got}")]
    TooFewSamples {
        what: &'static str,
        min: usize,
        got: usize,
    },

    /// A schedule was queried outside its step range.
    #[error("step index {t} out of range for schedule with {total_steps} total steps")]
    StepOutOfRange { t: usize, total_steps: usize },

    /// The caller's step index disagrees with the particle set's counter.
    #[error("step index {t} does not match particle iteration {iteration}")]
    IterationMismatch { t: usize, iteration: usize },

    /// The score of the target blew up at a specific particle.
    #[error("non-finite score for particle {index} at iteration {iteration}")]
    NonFiniteScore { index: usize, iteration: usize },

    /// Particle positions left the finite range; the run must abort rather
    /// than silently clamp.
    #[error("non-finite particle state after iteration {iteration}")]
    NonFiniteState { iteration: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}
