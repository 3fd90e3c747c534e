//! Batch front end for observer-based dynamic LQR: problem files, analyses,
//! landscape scans and reproduction of the reference experiments.

// Negated comparisons are used to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod commands;
pub mod error;
pub mod format;
pub mod grid;
pub mod input;
pub mod landscape;

pub use app::{main_with_args, run, Cli};
pub use error::{CliError, ExitStatus};
