//! Interchangeable inference engines for a hidden layer.

use dendronn_core::timewheel::{WheelCounters, WheelEngine};
use dendronn_core::unit::network_infer;
use dendronn_core::{CoreConfig, EventStream, HiddenRaster, SequenceSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Per-unit shift buffers stepped every timestep.
    #[default]
    Reference,
    /// Event-driven router and time wheel; exact windows only.
    Timewheel,
}

/// A hidden layer bound to one engine.
pub enum Runner<'a> {
    Reference { units: &'a [SequenceSpec], core: CoreConfig },
    Timewheel(Box<WheelEngine>),
}

impl<'a> Runner<'a> {
    pub fn new(engine: Engine, units: &'a [SequenceSpec], channels: u32, core: CoreConfig) -> Result<Self> {
        for u in units {
            u.check_channels(channels)?;
        }
        match engine {
            Engine::Reference => Ok(Runner::Reference { units, core }),
            Engine::Timewheel => {
                if core.accept_window != 0 {
                    return Err(Error::Config("the timewheel engine requires accept_window = 0".into()));
                }
                Ok(Runner::Timewheel(Box::new(WheelEngine::new(units, channels, core.refractory)?)))
            }
        }
    }

    pub fn infer(&mut self, stream: &EventStream) -> Result<HiddenRaster> {
        Ok(match self {
            Runner::Reference { units, core } => network_infer(units, stream, core)?,
            Runner::Timewheel(w) => w.infer(stream)?,
        })
    }

    /// Accumulated wheel counters; `None` for the reference engine.
    pub fn take_counters(&mut self) -> Option<WheelCounters> {
        match self {
            Runner::Reference { .. } => None,
            Runner::Timewheel(w) => Some(w.take_counters()),
        }
    }
}
