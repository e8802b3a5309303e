//! File formats, fixture directories, reports and the command-line tool
//! around [`morozov_core`].

pub mod cli;
pub mod error;
pub mod fixture;
pub mod formats;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
