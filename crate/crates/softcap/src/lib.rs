//! IO, file formats, and command implementations for the `softcap` CLI.
//!
//! The algorithmic core lives in `softcap-core`; this crate adds the JSON
//! config document, the trace file format, the reference-profile file, the
//! JSONL/CSV trace encodings, and the four subcommands (`run`, `sweep`,
//! `ablate`, `profile-build`).

pub mod commands;
pub mod config;
pub mod error;
pub mod profile_file;
pub mod report;
pub mod tracefile;

pub use error::CliError;
