//! File formats, run configuration and the command pipeline around
//! [`dendronn_core`].
//!
//! A run is described by one JSON [`config::RunConfig`]. The commands in
//! [`pipeline`] generate a dataset, search the hidden layer, train, prune
//! and quantize the readout, evaluate it and benchmark the event-driven
//! engine, each reading and writing artifacts in the run directory.

pub mod config;
pub mod engine;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use dendronn_core as core;
pub use error::{Error, Result};
