//! File formats, problem generators, image ingestion and the command-line
//! front end for `smd-core`.

pub mod cli;
pub mod error;
pub mod format;
pub mod image;
pub mod pnm;
pub mod synthetic;

pub use error::{Error, Result};
