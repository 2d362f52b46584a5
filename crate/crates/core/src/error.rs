use thiserror::Error;

/// Errors raised by the solver, scheduler and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible storage plan: {0}")]
    InfeasiblePlan(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
