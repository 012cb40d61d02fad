//! Command layer of the `qhemi` binary: certificate format, commands, selftest.

pub mod certificate;
pub mod commands;
pub mod selftest;

pub use certificate::{Certificate, ParseError};
pub use commands::{CliError, Format, ModelArgs, Output, RunConfig, Status};
