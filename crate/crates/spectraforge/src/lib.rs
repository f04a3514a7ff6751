//! File formats, the pipeline driver and the `spectraforge` command line
//! on top of `spectraforge-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod matrix_io;
pub mod pipeline;
pub mod report;
pub mod spb;

pub use error::{AppError, Result};
