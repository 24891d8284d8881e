//! Experiment commands: each takes a finalized [`crate::spec::ExperimentSpec`]
//! and emits machine-readable output.

mod cell_average;
mod modes_cmd;
mod rate_curve;
mod validate;

pub use cell_average::cmd_cell_average;
pub use modes_cmd::cmd_modes;
pub use rate_curve::cmd_rate_curve;
pub use validate::{cmd_validate, run_checks, CheckOutcome};
