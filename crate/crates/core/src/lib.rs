//! Deterministic simulation of an indoor optical wireless downlink served by a
//! ceiling-mounted VCSEL array.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: vectors, the transmitter array, receiver orientation and
//!   random-waypoint mobility.
//! - [`channel`]: Gaussian-beam downlink power, omnidirectional uplink power and
//!   the corner-cube retroreflector return path.
//! - [`link`]: APD noise, per-subcarrier SNR/SINR and the DCO-OFDM rate.
//! - [`eyesafety`]: exposure limits and the maximum allowable transmit power.
//! - [`analysis`]: closed-form statistics of the central beam, the Lambert W
//!   function and the single/multi-user rate bounds.
//! - [`activation`]: beam selection, signalling cost and the RSS neural network.
//! - [`runner`]: seeded Monte-Carlo experiments, CSV output and the CLI.

pub mod activation;
pub mod analysis;
pub mod channel;
pub mod error;
pub mod eyesafety;
pub mod geometry;
pub mod link;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
pub use geometry::Vec3;
