//! Scenario library, run driver and sweeps behind the `fracflow` binary.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod measure;
pub mod scenario;

pub use config::{ConfigError, ConfigReport, RunConfig, Scenario};
