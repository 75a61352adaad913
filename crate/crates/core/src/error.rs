//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// The integrator produced NaN or infinity; the run is unusable and the
    /// crowd model configuration likely blew up.
    #[error("non-finite state at t={t:.3}s (step {step}): {what}")]
    NonFiniteState { t: f64, step: u64, what: String },

    #[error("could not place {placed} of {requested} agents after {attempts} attempts; density infeasible")]
    InfeasiblePlacement {
        requested: usize,
        placed: usize,
        attempts: usize,
    },

    #[error("scenario file {path}: {source}")]
    ScenarioParse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
