//! Bistatic integrated-sensing-and-communication (ISAC) target detection toolkit.
//!
//! A base station transmits a superimposed waveform made of a deterministic
//! sensing component (sample covariance `R0`) and a Gaussian information-bearing
//! component (beamformer `w`). A spatially separated sensing receiver, which
//! knows the deterministic waveform but only the statistics of the data symbols,
//! decides whether a target is present.
//!
//! The crate provides:
//!
//! - [`specfun`]: Gaussian Q / inverse Q, modified Bessel `I_m`, and the
//!   right tail and quantile of the (non-)central chi-squared distribution.
//! - [`model`]: system/channel parameters, channel realizations, steering
//!   vectors, transmit-frame synthesis, and the scalar link metrics.
//! - [`detector`]: the likelihood-ratio detector for superimposed signals,
//!   threshold calibration, exact and asymptotic closed-form detection /
//!   false-alarm probabilities, and the benchmark detectors.
//! - [`sdp`]: a small dense complex semidefinite-program solver used by the
//!   beamforming optimizer.
//! - [`beamforming`]: detection-probability beamforming via semidefinite
//!   relaxation plus successive convex approximation, and the benchmark designs.
//! - [`montecarlo`]: reproducible trial engine estimating empirical detection
//!   and false-alarm rates; the universal oracle for every closed form.
//! - [`experiments`]: experiment runners producing CSV result tables.

pub mod beamforming;
pub mod detector;
pub mod experiments;
pub(crate) mod linalg;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod sdp;
pub mod specfun;

pub use detector::OperatingPoint;
pub use model::{BeamformerDesign, ChannelModelParams, ChannelSet, Scenario, SystemConfig};
pub use specfun::{Chi2Params, TailProb};
