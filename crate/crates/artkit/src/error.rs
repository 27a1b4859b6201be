use thiserror::Error;

/// Errors shared across generators, metrics, and the simulation lab.
#[derive(Debug, Error)]
pub enum ArtError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("retry budget of {attempts} attempts exhausted{}", match .radius {
        Some(r) => format!(" (current exclusion radius {r})"),
        None => String::new(),
    })]
    BudgetExhausted { attempts: u64, radius: Option<f64> },

    #[error("failure-region placement infeasible: {0}")]
    PlacementInfeasible(String),

    #[error("nonpositive input: {0}")]
    NonPositive(String),
}

pub type Result<T> = std::result::Result<T, ArtError>;
