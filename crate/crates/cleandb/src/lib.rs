//! File formats, reports and the command-line driver around
//! [`cleandb_core`].
//!
//! * [`csvio`]: UJI-style radio-map CSV files (AP columns, then labels).
//! * [`config`]: key-value load configuration (column mapping, sentinel, floor height).
//! * [`report`]: versioned JSON reports, ECDF / histogram data files and the
//!   results-table renderer.
//! * [`fsutil`]: atomic writes and the output-directory lock.
//! * [`cli`]: the `cleandb` subcommands.

pub mod cli;
pub mod config;
pub mod csvio;
mod error;
pub mod fsutil;
pub mod report;

pub use error::{Error, Result};
