use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stream::{Event, EventStream};

/// Nonnegative integer values of shape `(len, channels)`, row-major in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTensor {
    len: u32,
    channels: u32,
    values: Vec<u32>,
}

impl FrameTensor {
    pub fn zeros(len: u32, channels: u32) -> Self {
        Self {
            len,
            channels,
            values: vec![0; len as usize * channels as usize],
        }
    }

    pub fn from_values(len: u32, channels: u32, values: Vec<u32>) -> Result<Self> {
        let expected = len as usize * channels as usize;
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                what: "frame values",
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { len, channels, values })
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, t: u32, c: u32) -> u32 {
        self.values[t as usize * self.channels as usize + c as usize]
    }

    pub fn get_mut(&mut self, t: u32, c: u32) -> &mut u32 {
        &mut self.values[t as usize * self.channels as usize + c as usize]
    }

    pub fn total(&self) -> u64 {
        self.values.iter().map(|&v| v as u64).sum()
    }

    /// Distinct nonzero values.
    pub fn distinct_values(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.values.iter().copied().filter(|&v| v > 0).collect();
        set.into_iter().collect()
    }

    /// Truncates or zero-pads the time axis.
    pub fn resized(mut self, len: u32) -> Self {
        self.values.resize(len as usize * self.channels as usize, 0);
        self.len = len;
        self
    }
}

/// Open value intervals `(lower[k], upper[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceBorders {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SliceBorders {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::ShapeMismatch {
                what: "upper slice borders",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] < upper[k])) {
            return Err(Error::Config(format!(
                "slice {k} has lower border {} not below upper {}",
                lower[k], upper[k]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn n_slices(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, k: usize, value: f64) -> bool {
        self.lower[k] < value && value < self.upper[k]
    }
}

/// Binarizes a frame tensor: output channel `k * C + c` fires at `t` iff
/// the value at `(t, c)` is nonzero and lies strictly inside slice `k`.
/// Zero cells hold no event, so they stay silent even when a slice's lower
/// border is negative.
pub fn slice(frames: &FrameTensor, borders: &SliceBorders) -> EventStream {
    let c_in = frames.channels;
    let mut events = Vec::new();
    for t in 0..frames.len {
        for k in 0..borders.n_slices() {
            for c in 0..c_in {
                let v = frames.get(t, c);
                if v > 0 && borders.contains(k, v as f64) {
                    events.push(Event::new(t, k as u32 * c_in + c));
                }
            }
        }
    }
    EventStream::new(frames.len, c_in * borders.n_slices() as u32, events).expect("events are generated in order")
}

/// One slice per distinct value `v`: `(v / 1.3 - 3, 1.3 v + 3)`.
pub fn shd_slice_borders(values: &[u32]) -> SliceBorders {
    let distinct: BTreeSet<u32> = values.iter().copied().collect();
    let lower = distinct.iter().map(|&v| v as f64 / 1.3 - 3.0).collect();
    let upper = distinct.iter().map(|&v| v as f64 * 1.3 + 3.0).collect();
    SliceBorders::new(lower, upper).expect("scaled borders are ordered")
}
