//! Decoding-energy-aware intra coding.
//!
//! The crate bundles four layers:
//!
//! * [`energy_model`]: feature counts, specific-energy profiles, the linear
//!   decoding-energy estimator and a least-squares calibration path.
//! * [`codec`]: a compact HEVC-style intra codec (DC/Planar/33 angular
//!   modes, integer DCT, dead-zone quantizer, adaptive binary range coder)
//!   with a bit-exact decoder that re-counts decoder-side features.
//! * [`optimizer`]: Lagrangian cost evaluation under RDO, DEDO and DERDO,
//!   the lambda/QP laws and the CTU-level QP search experiment.
//! * [`metrics`]: PSNR, Bjøntegaard deltas and the WiFi transmission model.
//!
//! [`harness`] ties them together into the experiment pipeline used by the
//! `derd` command-line tool.

pub mod codec;
pub mod energy_model;
mod error;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod par;

pub use error::{Error, Result};
