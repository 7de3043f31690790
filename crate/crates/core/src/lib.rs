//! Binary spatiotemporal sequence-detection networks.
//!
//! A DendroNN hidden unit watches a handful of input channels and emits a
//! single spike whenever its sequence (ordered channel origins separated by
//! fixed inter-spike intervals) appears in the input. This crate holds the
//! allocation-only parts of the system:
//!
//! - [`unit`]: the shift-buffer reference unit, the hidden layer and a
//!   brute-force matcher used as a test oracle.
//! - [`timewheel`]: an event-driven engine with a connectivity router and a
//!   packed two-generation time wheel, bit-exact with [`unit`] at `ΔT = 0`.
//! - [`rewiring`]: the gradient-free structure search (longevity,
//!   selectivity, redraws).
//! - [`readout`]: integrator readout, AdamW training, magnitude pruning,
//!   int8 quantization, null-class thresholds and the memory model.
//! - [`data`]: NeuroMorse generation, noise, sMNIST/SHD preprocessing and
//!   slicing.
//!
//! File formats, configuration and the command line live in the `dendronn`
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod hwnorm;
pub mod readout;
pub mod rewiring;
pub mod sequence;
pub mod stream;
pub mod timewheel;
pub mod unit;

pub use error::{Error, Result};
pub use sequence::{CoreConfig, FreezeStatus, SequenceSpec};
pub use stream::{Event, EventStream};
pub use unit::{HiddenRaster, UnitBuffer};
