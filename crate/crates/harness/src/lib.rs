//! Monte-Carlo experiment runner, statistics and command line for the
//! `abo` optimizers.

pub mod cli;
pub mod demo;
pub mod error;
pub mod experiment;
pub mod output;
pub mod spec;
pub mod stats;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_experiment_with, ExperimentOutcome, RunFailure};
pub use spec::ExperimentSpec;
pub use stats::{AggregateStats, SignTest, StatsRow};
