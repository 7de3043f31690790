//! Reference shift-buffer implementation of the DendroNN unit.
//!
//! Every unit owns a binary buffer with one row per expectation stage
//! (stage `k` waits for spine `k`). Each timestep the rows shift one slot
//! towards index 0. A spike on spine `k - 1` that completes a partial match
//! writes a bit at offset `Δt_k + ΔT` of row `k`; the bit is due while it
//! sits inside slots `0..=ΔT`, which accepts the next spike between `Δt_k`
//! and `Δt_k + ΔT` steps later. A spike on spine `k` ANDs with the OR of
//! the due window and, on success, clears that whole window so one partial
//! match cannot fire more than once.
//!
//! Processing order inside a step is: shift, then spines in ascending order.
//! Because every interval is at least 1, writes never land in a due window
//! during the same step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sequence::{CoreConfig, SequenceSpec};
use crate::stream::EventStream;

/// Packed binary buffer of shape `(n_spines - 1, max_interval + ΔT + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitBuffer {
    rows: usize,
    width: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    refractory_fired: bool,
}

impl UnitBuffer {
    pub fn new(spec: &SequenceSpec, cfg: &CoreConfig) -> Self {
        let rows = spec.n_stages();
        let width = Self::width_for(spec, cfg);
        let words_per_row = width.div_ceil(64);
        Self {
            rows,
            width,
            words_per_row,
            bits: vec![0; rows * words_per_row],
            refractory_fired: false,
        }
    }

    fn width_for(spec: &SequenceSpec, cfg: &CoreConfig) -> usize {
        spec.max_interval() as usize + cfg.accept_window as usize + 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn refractory_fired(&self) -> bool {
        self.refractory_fired
    }

    pub fn reset(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
        self.refractory_fired = false;
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn get(&self, row: usize, slot: usize) -> bool {
        let w = self.bits[row * self.words_per_row + slot / 64];
        (w >> (slot % 64)) & 1 == 1
    }

    fn set(&mut self, row: usize, slot: usize) {
        debug_assert!(slot < self.width);
        self.bits[row * self.words_per_row + slot / 64] |= 1 << (slot % 64);
    }

    fn row_mut(&mut self, row: usize) -> &mut [u64] {
        let start = row * self.words_per_row;
        &mut self.bits[start..start + self.words_per_row]
    }

    /// Shifts every row one slot towards index 0, dropping slot 0.
    fn shift(&mut self) {
        for row in self.bits.chunks_exact_mut(self.words_per_row) {
            for i in 0..row.len() {
                let carry = row.get(i + 1).map_or(0, |w| w << 63);
                row[i] = (row[i] >> 1) | carry;
            }
        }
    }

    /// Clears slots `0..=window` of `row`, returning whether any was set.
    fn take_window(&mut self, row: usize, window: usize) -> bool {
        let mut hit = false;
        let mut remaining = window + 1;
        for word in self.row_mut(row) {
            if remaining == 0 {
                break;
            }
            let mask = if remaining >= 64 {
                u64::MAX
            } else {
                (1u64 << remaining) - 1
            };
            hit |= *word & mask != 0;
            *word &= !mask;
            remaining = remaining.saturating_sub(64);
        }
        hit
    }

    fn check_shape(&self, spec: &SequenceSpec, cfg: &CoreConfig) -> Result<()> {
        if self.rows != spec.n_stages() {
            return Err(Error::ShapeMismatch {
                what: "unit buffer rows",
                expected: spec.n_stages(),
                actual: self.rows,
            });
        }
        let width = Self::width_for(spec, cfg);
        if self.width != width {
            return Err(Error::ShapeMismatch {
                what: "unit buffer width",
                expected: width,
                actual: self.width,
            });
        }
        Ok(())
    }
}

/// Advances one unit by one timestep and returns its output bit.
pub fn unit_step(
    spec: &SequenceSpec,
    buf: &mut UnitBuffer,
    frame: &[bool],
    cfg: &CoreConfig,
) -> Result<bool> {
    buf.check_shape(spec, cfg)?;
    if let Some(&c) = spec.origins().iter().find(|&&c| c as usize >= frame.len()) {
        return Err(Error::ChannelOutOfRange {
            channel: c as usize,
            channels: frame.len(),
        });
    }
    Ok(step_unchecked(spec, buf, frame, cfg.accept_window as usize, cfg.refractory))
}

fn step_unchecked(
    spec: &SequenceSpec,
    buf: &mut UnitBuffer,
    frame: &[bool],
    window: usize,
    refractory: bool,
) -> bool {
    let origins = spec.origins();
    let intervals = spec.intervals();
    let last = origins.len() - 1;

    buf.shift();

    if frame[origins[0] as usize] {
        buf.set(0, intervals[0] as usize + window);
    }
    for stage in 1..last {
        if frame[origins[stage] as usize] && buf.take_window(stage - 1, window) {
            buf.set(stage, intervals[stage] as usize + window);
        }
    }
    let fired = frame[origins[last] as usize] && buf.take_window(last - 1, window);

    if fired && refractory {
        if buf.refractory_fired {
            return false;
        }
        buf.refractory_fired = true;
    }
    fired
}

/// Runs one unit over a whole stream from a zeroed buffer and returns the
/// timesteps at which it fired.
pub fn unit_run(spec: &SequenceSpec, stream: &EventStream, cfg: &CoreConfig) -> Result<Vec<u32>> {
    spec.check_channels(stream.channels())?;
    let mut buf = UnitBuffer::new(spec, cfg);
    let mut frame = vec![false; stream.channels() as usize];
    let mut out = Vec::new();
    for (t, events) in stream.bins() {
        for e in events {
            frame[e.c as usize] = true;
        }
        if step_unchecked(spec, &mut buf, &frame, cfg.accept_window as usize, cfg.refractory) {
            out.push(t);
        }
        for e in events {
            frame[e.c as usize] = false;
        }
    }
    Ok(out)
}

/// Per-channel spike bitsets of one stream, for counting exact matches
/// without stepping a buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelBits {
    len: u32,
    words: usize,
    /// Channel-major; bit `t % 64` of word `t / 64` is set iff the channel
    /// fired at `t`.
    bits: Vec<u64>,
}

impl ChannelBits {
    pub fn new(stream: &EventStream) -> Self {
        let words = (stream.len() as usize).div_ceil(64);
        let mut bits = vec![0u64; words * stream.channels() as usize];
        for e in stream.events() {
            bits[e.c as usize * words + e.t as usize / 64] |= 1 << (e.t % 64);
        }
        Self {
            len: stream.len(),
            words,
            bits,
        }
    }

    /// 64 bits of channel `c` starting at time `start` (may be negative);
    /// times outside the stream read as zero.
    fn window(&self, c: u32, start: i64) -> u64 {
        let row = &self.bits[c as usize * self.words..(c as usize + 1) * self.words];
        let word = |i: i64| -> u64 {
            if i < 0 || i as usize >= self.words {
                0
            } else {
                row[i as usize]
            }
        };
        let (w, off) = (start.div_euclid(64), start.rem_euclid(64) as u32);
        if off == 0 {
            word(w)
        } else {
            (word(w) >> off) | (word(w + 1) << (64 - off))
        }
    }
}

/// Number of spikes `spec` emits on the stream behind `bits` with an exact
/// acceptance window (`ΔT = 0`).
///
/// With no slack each expectation occupies its own buffer slot, so the unit
/// fires at `t` iff spine `k`'s channel fired at `t - span + offset_k` for
/// every spine. This ANDs shifted bitsets instead of stepping a buffer.
pub fn exact_spike_count(spec: &SequenceSpec, bits: &ChannelBits, refractory: bool) -> u32 {
    let span = spec.span() as i64;
    let mut lags = Vec::with_capacity(spec.n_spines());
    let mut offset = 0i64;
    lags.push(span);
    for &d in spec.intervals() {
        offset += d as i64;
        lags.push(span - offset);
    }
    let mut count = 0;
    for w in 0..bits.words {
        let t0 = w as i64 * 64;
        let mut acc = u64::MAX;
        for (&c, &lag) in spec.origins().iter().zip(&lags) {
            acc &= bits.window(c, t0 - lag);
            if acc == 0 {
                break;
            }
        }
        let valid = (bits.len as i64 - t0).min(64);
        if valid < 64 {
            acc &= (1u64 << valid) - 1;
        }
        count += acc.count_ones();
        if refractory && count > 0 {
            return 1;
        }
    }
    count
}

/// Binary hidden-layer output of one sample, stored as per-unit spike times.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HiddenRaster {
    len: u32,
    spikes: Vec<Vec<u32>>,
}

impl HiddenRaster {
    pub fn new(len: u32, n_units: usize) -> Self {
        Self {
            len,
            spikes: vec![Vec::new(); n_units],
        }
    }

    /// Builds a raster from per-unit sorted spike times.
    pub fn from_columns(len: u32, spikes: Vec<Vec<u32>>) -> Result<Self> {
        for (u, col) in spikes.iter().enumerate() {
            if col.windows(2).any(|w| w[0] >= w[1]) || col.last().is_some_and(|&t| t >= len) {
                return Err(Error::Contract(format!(
                    "column {u} is not a sorted in-range spike list"
                )));
            }
        }
        Ok(Self { len, spikes })
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn n_units(&self) -> usize {
        self.spikes.len()
    }

    pub fn column(&self, u: usize) -> &[u32] {
        &self.spikes[u]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.spikes
    }

    /// Appends a spike; times must arrive in nondecreasing order per unit.
    pub fn push(&mut self, u: usize, t: u32) {
        let col = &mut self.spikes[u];
        if col.last() != Some(&t) {
            col.push(t);
        }
    }

    pub fn get(&self, t: u32, u: usize) -> bool {
        self.spikes[u].binary_search(&t).is_ok()
    }

    /// Dense row `t` of the raster.
    pub fn row(&self, t: u32) -> Vec<bool> {
        (0..self.spikes.len()).map(|u| self.get(t, u)).collect()
    }

    /// Spike count per unit over the whole sample.
    pub fn counts(&self) -> Vec<u32> {
        self.spikes.iter().map(|c| c.len() as u32).collect()
    }

    pub fn total_spikes(&self) -> usize {
        self.spikes.iter().map(Vec::len).sum()
    }
}

/// Runs every unit of a hidden layer over `stream`.
pub fn network_infer(
    units: &[SequenceSpec],
    stream: &EventStream,
    cfg: &CoreConfig,
) -> Result<HiddenRaster> {
    let channels = stream.channels() as usize;
    let dense = stream.to_dense();
    let window = cfg.accept_window as usize;
    let mut raster = HiddenRaster::new(stream.len(), units.len());
    for (u, spec) in units.iter().enumerate() {
        spec.check_channels(stream.channels())?;
        let mut buf = UnitBuffer::new(spec, cfg);
        for t in 0..stream.len() {
            let frame = &dense[t as usize * channels..(t as usize + 1) * channels];
            if step_unchecked(spec, &mut buf, frame, window, cfg.refractory) {
                raster.spikes[u].push(t);
            }
        }
    }
    Ok(raster)
}

/// Independent matcher used as an oracle for [`unit_run`].
///
/// Works on sorted event-time lists instead of buffers. Stage by stage it
/// keeps the completion times of partial matches; an event on the next
/// origin extends (and consumes) every unconsumed partial match whose gap
/// lies in `[Δt, Δt + ΔT]`, processed in time order.
pub fn brute_force_match(
    spec: &SequenceSpec,
    stream: &EventStream,
    cfg: &CoreConfig,
) -> Result<Vec<u32>> {
    spec.check_channels(stream.channels())?;
    let times_on = |c: u32| -> Vec<u32> {
        stream
            .events()
            .iter()
            .filter(|e| e.c == c)
            .map(|e| e.t)
            .collect()
    };
    let window = cfg.accept_window;
    let mut partial = times_on(spec.origins()[0]);
    for (stage, &dt) in spec.intervals().iter().enumerate() {
        let mut consumed = vec![false; partial.len()];
        let mut next = Vec::new();
        for t in times_on(spec.origins()[stage + 1]) {
            let mut hit = false;
            for (j, &s) in partial.iter().enumerate() {
                if !consumed[j] && t >= s + dt && t <= s + dt + window {
                    consumed[j] = true;
                    hit = true;
                }
            }
            if hit {
                next.push(t);
            }
        }
        partial = next;
    }
    if cfg.refractory {
        partial.truncate(1);
    }
    Ok(partial)
}
