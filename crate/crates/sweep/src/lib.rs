//! Parameter sweeps over the feedback-controlled quantum dot.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{Mode, RunConfig, SolverKind};
pub use error::{SweepError, SweepResult};
pub use run::{run, RunSummary};
