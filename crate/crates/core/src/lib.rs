//! Robust max-min secrecy-rate and secrecy-energy-efficiency beamforming for
//! multicell networks with time-switching wireless power transfer.
//!
//! The crate is layered bottom-up: [`model`] builds scenarios, [`metrics`]
//! evaluates them exactly, [`sca`] builds the convex bounds used by the
//! path-following loops, [`conic`] assembles and solves the resulting
//! second-order cone programs, and [`algorithms`] drives the iterations.
//! [`validation`] holds oracles that check the bounds independently.

pub mod algorithms;
pub mod conic;
pub mod cplx;
pub mod error;
pub mod metrics;
pub mod model;
pub mod sca;
pub mod validation;

pub use error::{ConfigError, MetricError};
pub use metrics::{BeamformerSet, MetricReport, TimeSplit};
pub use model::{ChannelSet, NetworkConfig, Scenario};
