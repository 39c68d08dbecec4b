//! Ergodic-rate bound evaluation for linearly precoded multiuser MIMO downlinks.
//!
//! The crate simulates a block-fading broadcast channel with conjugate or
//! zero-forcing beamforming under perfect or MMSE-estimated CSI, and evaluates
//! an upper bound and three lower bounds on the per-user ergodic rate, by
//! Monte Carlo and — where available — in closed form.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod config;
pub mod montecarlo;
pub mod sideinfo;
pub mod special;
pub mod svg;
pub mod sweep;

pub use error::{Error, Result};
