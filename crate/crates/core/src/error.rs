use thiserror::Error;

/// Errors shared across the model tiers. CLI exit codes map config-type
/// variants to 1 and physics-type variants to 2.
#[derive(Debug, Error)]
pub enum DeitError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ambiguous level assignment: {0}")]
    AmbiguousLevel(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("precondition violated: {0}")]
    Mode(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("integration failed at t = {t:.6e} s (step {step:.3e} s, {steps} steps): {reason}")]
    Integration {
        t: f64,
        step: f64,
        steps: usize,
        reason: String,
    },

    #[error("invariant breach ({what}) of magnitude {magnitude:.3e} at t = {t:.6e} s")]
    InvariantBreach {
        what: String,
        magnitude: f64,
        t: f64,
    },

    #[error("state preparation did not converge: population trapped in {trap}")]
    PrepTrap { trap: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cancelled")]
    Cancelled,
}

impl DeitError {
    pub fn is_config(&self) -> bool {
        matches!(self, DeitError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, DeitError>;
