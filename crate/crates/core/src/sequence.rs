//! Sequence definitions shared by every engine.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Rewiring status of a unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum FreezeStatus {
    #[default]
    Free,
    TempFrozen,
    PermFrozen,
}

/// The spatiotemporal feature one unit detects.
///
/// `origins` lists the source channel of every spine in temporal order and
/// `intervals[i]` is the gap in timesteps between spine `i` and spine `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceSpec {
    origins: Vec<u32>,
    intervals: Vec<u32>,
    pub status: FreezeStatus,
}

impl SequenceSpec {
    pub fn new(origins: Vec<u32>, intervals: Vec<u32>) -> Result<Self> {
        if origins.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 spines, got {}",
                origins.len()
            )));
        }
        if intervals.len() + 1 != origins.len() {
            return Err(Error::InvalidSpec(format!(
                "{} spines need {} intervals, got {}",
                origins.len(),
                origins.len() - 1,
                intervals.len()
            )));
        }
        if let Some(i) = intervals.iter().position(|&dt| dt == 0) {
            return Err(Error::InvalidSpec(format!("interval {i} is zero")));
        }
        Ok(Self {
            origins,
            intervals,
            status: FreezeStatus::Free,
        })
    }

    /// Checks every origin against the input channel count.
    pub fn check_channels(&self, channels: u32) -> Result<()> {
        match self.origins.iter().find(|&&c| c >= channels) {
            Some(&c) => Err(Error::ChannelOutOfRange {
                channel: c as usize,
                channels: channels as usize,
            }),
            None => Ok(()),
        }
    }

    pub fn n_spines(&self) -> usize {
        self.origins.len()
    }

    /// Number of expectation stages (`n_spines - 1`).
    pub fn n_stages(&self) -> usize {
        self.intervals.len()
    }

    pub fn origins(&self) -> &[u32] {
        &self.origins
    }

    pub fn intervals(&self) -> &[u32] {
        &self.intervals
    }

    pub fn max_interval(&self) -> u32 {
        self.intervals.iter().copied().max().unwrap_or(0)
    }

    /// Timesteps between the first and last spike of an exact match.
    pub fn span(&self) -> u32 {
        self.intervals.iter().sum()
    }

    pub fn with_status(mut self, status: FreezeStatus) -> Self {
        self.status = status;
        self
    }
}

/// Settings shared by every unit of a network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoreConfig {
    /// Spike acceptance window `ΔT`: a spike may arrive up to this many
    /// timesteps after its nominal interval.
    pub accept_window: u32,
    /// Whole-sample refractory period: at most one output spike per sample.
    pub refractory: bool,
}

impl CoreConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn with_window(accept_window: u32) -> Self {
        Self {
            accept_window,
            refractory: false,
        }
    }
}

/// Total number of binary input connections of a hidden layer.
pub fn input_connection_count(units: &[SequenceSpec]) -> usize {
    units.iter().map(SequenceSpec::n_spines).sum()
}

/// Input-connection density of a hidden layer relative to a dense layer
/// with one row per spine.
pub fn spatial_density(units: &[SequenceSpec], channels: u32) -> f64 {
    let rows = input_connection_count(units);
    if rows == 0 || channels == 0 {
        return 0.0;
    }
    rows as f64 / (rows as f64 * channels as f64)
}
