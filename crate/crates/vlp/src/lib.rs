//! File formats, parallel sweeps and the experiment driver on top of `vlp-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod fixture;
pub mod io;
pub mod par;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
pub use par::Rayon;
