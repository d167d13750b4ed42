//! Modal smoothing for MIMO systems built from a spherical loudspeaker array
//! and a spherical microphone array.
//!
//! The crate synthesizes spherical-harmonic-domain room transfer matrices
//! with an image-source model, estimates smoothed cross-spectrum matrices by
//! frequency smoothing, modal smoothing or both, and localizes early
//! reflections with MUSIC.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod error;
pub mod harness;
pub mod music;
pub mod room;
pub mod sh;
pub mod smoothing;
pub mod synthesis;

pub use error::{Error, Result};
