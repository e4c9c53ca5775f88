//! Command-line front end: argument definitions, run manifests, plotting and the
//! subcommand implementations behind the `trajeval` binary.

pub mod args;
mod commands;
mod load;
pub mod manifest;
pub mod plot;

pub use commands::{run, Outcome};

/// Exit status when outputs were written but some metrics failed.
pub const EXIT_PARTIAL: u8 = 3;
