//! JSON file formats, DOT export and the `minbrain` command line for
//! [`minbrain_core`].

pub mod cli;
pub mod dot;
pub mod format;

pub use format::FormatError;
