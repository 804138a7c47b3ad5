pub mod bounds;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod policy;
pub mod simulator;
pub mod solver;
pub mod space;
pub mod structure;

pub use error::{Error, Result};
pub use model::{Action, ModelParams, SystemState, TERMINAL};
pub use solver::{solve, solve_exact, solve_with, Decision, SolveOptions, SolveResult};
