//! Experiment harness: configuration, the simulation loop, metrics, the
//! scripted experiments and their CSV/JSON outputs.

pub mod config;
pub mod experiments;
pub mod io;
pub mod metrics;
pub mod sim;

pub use config::RunConfig;
pub use experiments::{run_closed_loop, run_open_loop, run_sweep, run_turn, SweepResult, TrialResult};
pub use metrics::{metrics, TrialSummary};
