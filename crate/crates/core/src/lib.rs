//! Thermometry of a single trapped ion from its fluorescence image.
//!
//! The crate covers both directions of the measurement:
//!
//! * forward: Doppler-cooling balance → equilibrium temperature → spatial
//!   spread of the ion → width of the recorded spot, plus synthesis of
//!   noisy camera frames;
//! * inverse: nearest-neighbour rotation, column projection and 1D Gaussian
//!   fitting of frames, magnification and Rabi-frequency calibrations, and
//!   regression of the anomalous heating rate on width scans.
//!
//! All quantities are SI internally (kg, m, s, K, rad/s). Conversions to
//! laboratory units (MHz, µm, quanta/ms) happen only in [`io`].

// `!(x > 0.0)` rejects NaN together with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod constants;
pub mod error;
pub mod imaging;
pub mod inference;
pub mod io;
pub mod lm;
pub mod physics;

pub use error::{Error, Result};
