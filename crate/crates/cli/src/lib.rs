//! Experiment harness: seeded trial sweeps, bound verification, problem
//! sizes and figure-ready CSVs.

pub mod error;
pub mod experiment;
pub mod plot;
pub mod spec;
pub mod verify;

pub use error::CliError;
