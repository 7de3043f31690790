//! Event-driven execution on a packed two-generation time wheel.
//!
//! Each expectation stage `k` of unit `u` owns `D` slots of two bits, one per
//! wheel generation. A global pointer `p` advances once per tick and a phase
//! bit `φ` names the current generation `g = φ`. Scheduling a delay `Δt`
//! writes slot `(p + Δt) mod D` in plane `g` when `p + Δt < D` and in plane
//! `ḡ` otherwise; due checks read slot `p` in plane `g`. On wrap the phase
//! toggles and the new `ḡ` plane is cleared, which discards expectations that
//! were never consumed during their rotation.
//!
//! Only units connected to a spiking channel are touched; an empty bin costs
//! one pointer increment plus the clear amortized over `D` ticks. Results are
//! bit-exact with [`crate::unit::network_infer`] for `ΔT = 0`.

mod router;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use router::{ConnectivityRouter, Target};

use crate::error::{Error, Result};
use crate::sequence::SequenceSpec;
use crate::stream::EventStream;
use crate::unit::HiddenRaster;

/// Default delay horizon (8-bit delay precision).
pub const DEFAULT_HORIZON: u32 = 256;

/// Largest spine count the engine accepts per unit.
pub const MAX_SPINES: usize = 8;

const SLOTS_PER_WORD: usize = 32;
const GEN0_MASK: u64 = 0x5555_5555_5555_5555;
const GEN1_MASK: u64 = 0xAAAA_AAAA_AAAA_AAAA;

/// A unit spike emitted by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmittedSpike {
    pub t: u32,
    pub unit: u32,
}

/// Work counters accumulated by the engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WheelCounters {
    pub ticks: u64,
    pub plane_clears: u64,
    pub words_cleared: u64,
    pub events_routed: u64,
    pub targets_routed: u64,
    pub due_checks: u64,
    pub due_hits: u64,
    pub schedules: u64,
    pub emitted: u64,
}

impl WheelCounters {
    /// Per-unit state operations: due checks plus schedules.
    pub fn unit_work(&self) -> u64 {
        self.due_checks + self.schedules
    }

    pub fn merge(&mut self, other: &Self) {
        self.ticks += other.ticks;
        self.plane_clears += other.plane_clears;
        self.words_cleared += other.words_cleared;
        self.events_routed += other.events_routed;
        self.targets_routed += other.targets_routed;
        self.due_checks += other.due_checks;
        self.due_hits += other.due_hits;
        self.schedules += other.schedules;
        self.emitted += other.emitted;
    }
}

impl fmt::Display for WheelCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ticks={}", self.ticks)?;
        writeln!(f, "plane_clears={}", self.plane_clears)?;
        writeln!(f, "words_cleared={}", self.words_cleared)?;
        writeln!(f, "events_routed={}", self.events_routed)?;
        writeln!(f, "targets_routed={}", self.targets_routed)?;
        writeln!(f, "due_checks={}", self.due_checks)?;
        writeln!(f, "due_hits={}", self.due_hits)?;
        writeln!(f, "schedules={}", self.schedules)?;
        write!(f, "emitted={}", self.emitted)
    }
}

/// Packed unit-state memory plus pointer, phase and delay tables.
#[derive(Debug, Clone)]
pub struct TimeWheelState {
    horizon: u32,
    words_per_row: usize,
    pointer: u32,
    phase: u8,
    n_units: usize,
    max_stages: usize,
    spines: Vec<u8>,
    /// `delays[u * max_stages + (k - 1)]` is the interval leading into stage `k`.
    delays: Vec<u32>,
    /// Row `(k - 1) * n_units + u`, `words_per_row` words each.
    slots: Vec<u64>,
    counters: WheelCounters,
}

impl TimeWheelState {
    /// Allocates state for `units` with delay horizon `horizon` (a power of
    /// two, at least 32). Every interval must be below the horizon.
    pub fn new(units: &[SequenceSpec], horizon: u32) -> Result<Self> {
        if !horizon.is_power_of_two() || (horizon as usize) < SLOTS_PER_WORD {
            return Err(Error::Config(format!(
                "wheel horizon {horizon} must be a power of two >= {SLOTS_PER_WORD}"
            )));
        }
        let max_stages = units.iter().map(SequenceSpec::n_stages).max().unwrap_or(0);
        let mut spines = Vec::with_capacity(units.len());
        let mut delays = vec![0; units.len() * max_stages];
        for (u, spec) in units.iter().enumerate() {
            if spec.n_spines() > MAX_SPINES {
                return Err(Error::Config(format!(
                    "unit {u} has {} spines, engine limit is {MAX_SPINES}",
                    spec.n_spines()
                )));
            }
            if spec.max_interval() >= horizon {
                return Err(Error::Config(format!(
                    "unit {u} interval {} does not fit horizon {horizon}",
                    spec.max_interval()
                )));
            }
            spines.push(spec.n_spines() as u8);
            delays[u * max_stages..u * max_stages + spec.n_stages()]
                .copy_from_slice(spec.intervals());
        }
        let words_per_row = horizon as usize / SLOTS_PER_WORD;
        Ok(Self {
            horizon,
            words_per_row,
            pointer: 0,
            phase: 0,
            n_units: units.len(),
            max_stages,
            spines,
            delays,
            slots: vec![0; max_stages * units.len() * words_per_row],
            counters: WheelCounters::default(),
        })
    }

    /// Smallest valid horizon (at least the default) covering `units`.
    pub fn horizon_for(units: &[SequenceSpec]) -> u32 {
        let max = units.iter().map(SequenceSpec::max_interval).max().unwrap_or(0);
        (max + 1).next_power_of_two().max(DEFAULT_HORIZON)
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn pointer(&self) -> u32 {
        self.pointer
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn counters(&self) -> &WheelCounters {
        &self.counters
    }

    pub fn take_counters(&mut self) -> WheelCounters {
        core::mem::take(&mut self.counters)
    }

    /// Zeroes both planes and rewinds pointer and phase.
    pub fn reset(&mut self) {
        self.slots.iter_mut().for_each(|w| *w = 0);
        self.pointer = 0;
        self.phase = 0;
    }

    pub fn is_clear(&self) -> bool {
        self.slots.iter().all(|&w| w == 0)
    }

    /// Number of set bits in generation plane `gen` (0 or 1).
    pub fn plane_population(&self, gen: u8) -> u32 {
        let mask = if gen == 0 { GEN0_MASK } else { GEN1_MASK };
        self.slots.iter().map(|w| (w & mask).count_ones()).sum()
    }

    /// Reads bit `gen` of slot `x` of stage `k` (1-based) for unit `u`.
    pub fn slot(&self, k: usize, u: usize, x: u32, gen: u8) -> bool {
        let (word, bit) = self.locate(k, u, x, gen);
        (self.slots[word] >> bit) & 1 == 1
    }

    #[inline]
    fn locate(&self, k: usize, u: usize, x: u32, gen: u8) -> (usize, u32) {
        let row = (k - 1) * self.n_units + u;
        let x = x as usize;
        let word = row * self.words_per_row + x / SLOTS_PER_WORD;
        let bit = 2 * (x % SLOTS_PER_WORD) as u32 + gen as u32;
        (word, bit)
    }

    /// Moves the pointer one tick; on wrap toggles the phase and clears the
    /// plane that becomes the next generation.
    pub fn advance_tick(&mut self) {
        self.counters.ticks += 1;
        self.pointer = (self.pointer + 1) & (self.horizon - 1);
        if self.pointer == 0 {
            self.phase ^= 1;
            let next_gen = self.phase ^ 1;
            let clear = !(if next_gen == 0 { GEN0_MASK } else { GEN1_MASK });
            for w in &mut self.slots {
                *w &= clear;
            }
            self.counters.plane_clears += 1;
            self.counters.words_cleared += self.slots.len() as u64;
        }
    }

    #[inline]
    fn schedule(&mut self, k: usize, u: usize) {
        let dt = self.delays[u * self.max_stages + k - 1];
        let sum = self.pointer + dt;
        let q = sum & (self.horizon - 1);
        let gen = if sum < self.horizon {
            self.phase
        } else {
            self.phase ^ 1
        };
        let (word, bit) = self.locate(k, u, q, gen);
        self.slots[word] |= 1 << bit;
        self.counters.schedules += 1;
    }

    /// Reads and consumes the due-now bit of stage `k`.
    #[inline]
    fn take_due(&mut self, k: usize, u: usize) -> bool {
        self.counters.due_checks += 1;
        let (word, bit) = self.locate(k, u, self.pointer, self.phase);
        let due = (self.slots[word] >> bit) & 1 == 1;
        if due {
            self.slots[word] &= !(1 << bit);
            self.counters.due_hits += 1;
        }
        due
    }

    /// Applies the micro-operation for spine `s` of unit `u` at timestep `t`.
    ///
    /// Spine 0 schedules stage 1; an intermediate spine checks its stage and,
    /// when due, consumes it and schedules the next stage; the final spine
    /// consumes its stage and emits. A failed due check has no effect.
    ///
    /// Panics if `u` or `s` is out of range.
    pub fn handle_target(&mut self, u: usize, s: usize, t: u32) -> Option<EmittedSpike> {
        let last = self.spines[u] as usize - 1;
        assert!(s <= last, "spine {s} out of range for unit {u}");
        if s == 0 {
            self.schedule(1, u);
            return None;
        }
        if !self.take_due(s, u) {
            return None;
        }
        if s < last {
            self.schedule(s + 1, u);
            None
        } else {
            self.counters.emitted += 1;
            Some(EmittedSpike { t, unit: u as u32 })
        }
    }
}

/// Runs one sample through the router and wheel.
///
/// Per timestep the pointer advances first, then each event of the bin is
/// routed in `(t, c)` order. With `refractory`, only the first emission of
/// each unit is reported.
pub fn run_sample(
    router: &ConnectivityRouter,
    state: &mut TimeWheelState,
    stream: &EventStream,
    refractory: bool,
) -> Result<Vec<EmittedSpike>> {
    if let Some(e) = stream.events().iter().find(|e| e.c >= router.channels()) {
        return Err(Error::ChannelOutOfRange {
            channel: e.c as usize,
            channels: router.channels() as usize,
        });
    }
    let mut fired = if refractory {
        vec![false; state.n_units]
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    for (t, events) in stream.bins() {
        state.advance_tick();
        for e in events {
            state.counters.events_routed += 1;
            let targets = router.targets(e.c);
            state.counters.targets_routed += targets.len() as u64;
            for target in targets {
                if let Some(spike) = state.handle_target(target.unit as usize, target.spine as usize, t) {
                    if refractory {
                        let flag = &mut fired[spike.unit as usize];
                        if *flag {
                            continue;
                        }
                        *flag = true;
                    }
                    out.push(spike);
                }
            }
        }
    }
    Ok(out)
}

/// Converts engine emissions into a hidden raster.
pub fn emissions_to_raster(len: u32, n_units: usize, spikes: &[EmittedSpike]) -> HiddenRaster {
    let mut raster = HiddenRaster::new(len, n_units);
    for s in spikes {
        raster.push(s.unit as usize, s.t);
    }
    raster
}

/// Owns router and wheel for a fixed network and infers samples from a
/// clean state.
#[derive(Debug, Clone)]
pub struct WheelEngine {
    router: ConnectivityRouter,
    state: TimeWheelState,
    refractory: bool,
}

impl WheelEngine {
    pub fn new(units: &[SequenceSpec], channels: u32, refractory: bool) -> Result<Self> {
        Self::with_horizon(units, channels, refractory, TimeWheelState::horizon_for(units))
    }

    pub fn with_horizon(
        units: &[SequenceSpec],
        channels: u32,
        refractory: bool,
        horizon: u32,
    ) -> Result<Self> {
        Ok(Self {
            router: ConnectivityRouter::build(units, channels)?,
            state: TimeWheelState::new(units, horizon)?,
            refractory,
        })
    }

    pub fn router(&self) -> &ConnectivityRouter {
        &self.router
    }

    pub fn state(&self) -> &TimeWheelState {
        &self.state
    }

    pub fn counters(&self) -> &WheelCounters {
        self.state.counters()
    }

    pub fn take_counters(&mut self) -> WheelCounters {
        self.state.take_counters()
    }

    /// Resets the wheel and returns the sample's hidden raster.
    pub fn infer(&mut self, stream: &EventStream) -> Result<HiddenRaster> {
        self.state.reset();
        let spikes = run_sample(&self.router, &mut self.state, stream, self.refractory)?;
        Ok(emissions_to_raster(stream.len(), self.state.n_units, &spikes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::CoreConfig;
    use crate::stream::Event;
    use crate::unit::network_infer;

    fn unit(origins: &[u32], intervals: &[u32]) -> SequenceSpec {
        SequenceSpec::new(origins.to_vec(), intervals.to_vec()).unwrap()
    }

    #[test]
    fn pointer_advances_without_wrap() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1], &[3])], 256).unwrap();
        for _ in 0..5 {
            st.advance_tick();
        }
        assert_eq!(st.pointer(), 5);
        st.advance_tick();
        assert_eq!((st.pointer(), st.phase()), (6, 0));
    }

    #[test]
    fn wrap_toggles_phase_and_clears_next_plane() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1], &[3])], 32).unwrap();
        for _ in 0..31 {
            st.advance_tick();
        }
        assert_eq!(st.pointer(), 31);
        // Schedule a same-generation bit and a wrapped bit before the wrap.
        st.pointer = 20;
        st.handle_target(0, 0, 0);
        assert!(st.slot(1, 0, 23, 0));
        st.pointer = 30;
        st.handle_target(0, 0, 0);
        assert!(st.slot(1, 0, 1, 1));
        st.pointer = 31;
        st.advance_tick();
        assert_eq!((st.pointer(), st.phase()), (0, 1));
        // The old current plane (gen 0) is now next and has been cleared.
        assert_eq!(st.plane_population(0), 0);
        assert!(st.slot(1, 0, 1, 1));
    }

    #[test]
    fn full_rotation_toggles_once() {
        let mut st = TimeWheelState::new(&[], 64).unwrap();
        for _ in 0..64 {
            st.advance_tick();
        }
        assert_eq!((st.pointer(), st.phase()), (0, 1));
        assert_eq!(st.counters().plane_clears, 1);
    }

    #[test]
    fn spine0_schedules_at_pointer_plus_delay() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1, 2], &[5, 2])], 256).unwrap();
        st.pointer = 10;
        assert_eq!(st.handle_target(0, 0, 10), None);
        assert!(st.slot(1, 0, 15, 0));
        assert_eq!(st.plane_population(0) + st.plane_population(1), 1);
    }

    #[test]
    fn overflowing_schedule_goes_to_next_generation() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1], &[2])], 256).unwrap();
        st.pointer = 255;
        st.handle_target(0, 0, 0);
        assert!(st.slot(1, 0, 1, 1));
        assert!(!st.slot(1, 0, 1, 0));
    }

    #[test]
    fn failed_due_check_has_no_effect() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1, 2], &[5, 2])], 256).unwrap();
        st.pointer = 40;
        st.handle_target(0, 0, 40);
        let before = st.slots.clone();
        st.pointer = 44;
        assert_eq!(st.handle_target(0, 1, 44), None);
        assert_eq!(st.slots, before);
        assert_eq!(st.counters().due_hits, 0);
    }

    #[test]
    fn three_spine_chain_emits() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1, 2], &[5, 2])], 256).unwrap();
        st.pointer = 40;
        st.handle_target(0, 0, 7);
        st.pointer = 45;
        assert_eq!(st.handle_target(0, 1, 12), None);
        assert!(st.slot(2, 0, 47, 0));
        st.pointer = 47;
        assert_eq!(st.handle_target(0, 2, 14), Some(EmittedSpike { t: 14, unit: 0 }));
        assert!(st.is_clear());
    }

    #[test]
    fn empty_stream_touches_no_unit_state() {
        let units = [unit(&[0, 1], &[3]), unit(&[1, 0, 1], &[2, 9])];
        let mut engine = WheelEngine::with_horizon(&units, 2, false, 32).unwrap();
        let raster = engine.infer(&EventStream::empty(200, 2)).unwrap();
        assert_eq!(raster.total_spikes(), 0);
        let c = engine.counters();
        assert_eq!(c.unit_work(), 0);
        assert_eq!(c.ticks, 200);
        assert_eq!(c.plane_clears, 6);
        assert!(engine.state().is_clear());
    }

    #[test]
    fn in_flight_matches_use_distinct_slots() {
        let mut st = TimeWheelState::new(&[unit(&[0, 1], &[10])], 256).unwrap();
        st.pointer = 3;
        st.handle_target(0, 0, 3);
        st.pointer = 4;
        st.handle_target(0, 0, 4);
        assert!(st.slot(1, 0, 13, 0) && st.slot(1, 0, 14, 0));
    }

    #[test]
    fn matches_reference_across_wraps() {
        let units = [unit(&[0, 1, 0], &[20, 13]), unit(&[1, 1], &[31]), unit(&[0, 0], &[1])];
        let mut events = Vec::new();
        for t in (0..400).step_by(7) {
            events.push(Event::new(t, (t / 7 % 2) as u32));
        }
        for t in (3..400).step_by(11) {
            events.push(Event::new(t, 0));
        }
        let stream = EventStream::from_unsorted(400, 2, events).unwrap();
        let reference = network_infer(&units, &stream, &CoreConfig::exact()).unwrap();
        let mut engine = WheelEngine::with_horizon(&units, 2, false, 32).unwrap();
        assert_eq!(engine.infer(&stream).unwrap(), reference);
        assert!(reference.total_spikes() > 0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(TimeWheelState::new(&[], 100).is_err());
        assert!(TimeWheelState::new(&[unit(&[0, 1], &[256])], 256).is_err());
        assert_eq!(TimeWheelState::horizon_for(&[unit(&[0, 1], &[256])]), 512);
        let router = ConnectivityRouter::build(&[unit(&[0, 1], &[2])], 2).unwrap();
        let mut st = TimeWheelState::new(&[unit(&[0, 1], &[2])], 256).unwrap();
        let stream = EventStream::new(4, 3, vec![Event::new(0, 2)]).unwrap();
        assert!(run_sample(&router, &mut st, &stream, false).is_err());
    }
}
