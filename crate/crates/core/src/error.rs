use thiserror::Error;

use crate::model::SystemState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name}: {value} (must be strictly positive and finite)")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("job budget n_max must be in 1..={max}, got {got}")]
    InvalidBudget { got: usize, max: usize },

    #[error("tie tolerance must be finite and non-negative, got {0}")]
    InvalidTieTolerance(f64),

    #[error("state {0} is not in the state space")]
    NotInStateSpace(SystemState),

    #[error("no active servers in state {0}")]
    NoActiveServers(SystemState),

    #[error("state {0} is not a decision state")]
    NotDecisionState(SystemState),

    #[error("state {state} out of solved range (n_max = {n_max})")]
    OutOfRange { state: SystemState, n_max: usize },

    #[error("relative error undefined for optimal value {0}")]
    ZeroOptimalValue(f64),

    #[error("unknown policy '{0}'")]
    UnknownPolicy(String),

    #[error("bad policy spec '{spec}': {reason}")]
    BadPolicySpec { spec: String, reason: String },

    #[error("policy '{0}' needs a solved optimal table")]
    MissingSolution(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error("episodes must be at least 1")]
    NoEpisodes,
}

pub type Result<T> = std::result::Result<T, Error>;
