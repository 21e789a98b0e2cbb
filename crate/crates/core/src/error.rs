use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain of an operation (bad location, off-grid size, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or problem failed validation at construction.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The action is not available at the given location.
    #[error("action {action:?} is not admissible at location {location}")]
    Inadmissible { action: crate::Action, location: usize },

    /// A structural assumption required by the threshold solver does not hold.
    #[error("threshold structure requires {clause}: {detail}")]
    Precondition { clause: &'static str, detail: String },

    /// The dense lattice would not fit in the configured memory budget.
    #[error("value/policy lattice needs {required} bytes, budget is {budget} bytes")]
    Resource { required: u64, budget: u64 },

    /// The brute-force oracle refuses instances above its size guard.
    #[error("instance too large for exhaustive search: {0}")]
    SizeGuard(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
