//! Subcommand implementations.

pub mod ablate;
pub mod profile;
pub mod run;
pub mod sweep;

pub use ablate::cmd_ablate;
pub use profile::cmd_profile_build;
pub use run::cmd_run;
pub use sweep::cmd_sweep;
