//! Gradient-free structure search over unit sequences.
//!
//! Units start from random sequences and are inferred on batches of training
//! samples. A unit's longevity grows with every sample its sequence occurs in
//! and shrinks (scaled by the penalty-reward ratio) for every sample it does
//! not. Crossing the lower threshold redraws the unit; crossing the upper one
//! freezes it temporarily, after which its per-class selectivity is checked
//! on a stratified batch. Selective units are frozen permanently and assigned
//! to their class until every class quota is filled.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::sequence::{CoreConfig, FreezeStatus, SequenceSpec};
use crate::unit::{exact_spike_count, unit_run, ChannelBits};

/// Permanent-freeze rule applied to a unit's selectivity vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Criterion {
    /// `S_i > θ_S`.
    #[default]
    ThresholdOnly,
    /// `S_i > θ_S` and `S_i - ε_S > max_{j != i} S_j`.
    ThresholdAndGap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewiringConfig {
    /// Penalty-reward ratio `r_pr`.
    pub r_pr: f64,
    /// Longevity at or below which a unit is redrawn.
    pub theta_low: f64,
    /// Longevity at or above which a unit is temporarily frozen.
    pub theta_high: f64,
    /// Selectivity threshold `θ_S`.
    pub theta_s: f64,
    /// Selectivity gap `ε_S` (gap criterion only).
    pub epsilon_s: f64,
    pub criterion: Criterion,
    pub spine_min: usize,
    pub spine_max: usize,
    /// Largest inter-spike interval drawn for a new sequence.
    pub interval_upper_bound: u32,
    /// Derive the interval bound from the longest sample of the classes
    /// still being searched, divided by `N_S - 1`.
    pub adaptive_interval_bound: bool,
    pub batch_size: usize,
    /// Batch budget before the search gives up.
    pub max_batches: usize,
    /// Samples per class in a selectivity validation batch.
    pub validation_per_class: usize,
    /// Network settings used while inferring candidate units.
    pub core: CoreConfig,
}

impl RewiringConfig {
    /// Defaults for batch size `b`: thresholds at `±2b`, `r_pr = 0.1`,
    /// `θ_S = 0.5`, criterion 1.
    pub fn with_batch_size(b: usize) -> Self {
        Self {
            r_pr: 0.1,
            theta_low: -2.0 * b as f64,
            theta_high: 2.0 * b as f64,
            theta_s: 0.5,
            epsilon_s: 0.0,
            criterion: Criterion::ThresholdOnly,
            spine_min: 2,
            spine_max: 5,
            interval_upper_bound: 20,
            adaptive_interval_bound: false,
            batch_size: b,
            max_batches: 10_000,
            validation_per_class: 16,
            core: CoreConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_low < 0.0 && self.theta_high > 0.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy θ_l < 0 < θ_h, got {} and {}",
                self.theta_low, self.theta_high
            )));
        }
        if !(self.theta_s > 0.0 && self.theta_s <= 1.0) {
            return Err(Error::Config(format!("θ_S {} outside (0, 1]", self.theta_s)));
        }
        if !(self.r_pr >= 0.0) {
            return Err(Error::Config(format!("r_pr {} is negative", self.r_pr)));
        }
        if self.spine_min < 2 || self.spine_min > self.spine_max {
            return Err(Error::Config(format!(
                "invalid spine range [{}, {}]",
                self.spine_min, self.spine_max
            )));
        }
        if self.interval_upper_bound == 0 {
            return Err(Error::Config("interval upper bound must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for RewiringConfig {
    fn default() -> Self {
        Self::with_batch_size(50)
    }
}

/// Per-unit longevity accumulators and freeze status.
#[derive(Debug, Clone, PartialEq)]
pub struct LongevityState {
    pub longevity: Vec<f64>,
    pub status: Vec<FreezeStatus>,
}

impl LongevityState {
    pub fn new(n_units: usize) -> Self {
        Self {
            longevity: vec![0.0; n_units],
            status: vec![FreezeStatus::Free; n_units],
        }
    }

    pub fn n_units(&self) -> usize {
        self.longevity.len()
    }
}

/// `L ← L + n_occ - r_pr (B - n_occ)` for every free unit.
pub fn update_longevity(
    state: &mut LongevityState,
    occurrences: &[usize],
    batch: usize,
    cfg: &RewiringConfig,
) -> Result<()> {
    if occurrences.len() != state.n_units() {
        return Err(Error::ShapeMismatch {
            what: "occurrence vector",
            expected: state.n_units(),
            actual: occurrences.len(),
        });
    }
    if let Some((u, &n)) = occurrences.iter().enumerate().find(|(_, &n)| n > batch) {
        return Err(Error::Contract(format!(
            "unit {u} occurs in {n} samples of a batch of {batch}"
        )));
    }
    for (u, &n) in occurrences.iter().enumerate() {
        if state.status[u] == FreezeStatus::Free {
            state.longevity[u] += n as f64 - cfg.r_pr * (batch - n) as f64;
        }
    }
    Ok(())
}

/// Units whose longevity crossed a threshold during one check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThresholdOutcome {
    pub rewired: Vec<usize>,
    pub temp_frozen: Vec<usize>,
}

/// Redraws free units at or below `θ_l` (resetting their longevity) and
/// temporarily freezes free units at or above `θ_h`.
pub fn apply_longevity_thresholds<R: Rng + ?Sized>(
    state: &mut LongevityState,
    units: &mut [SequenceSpec],
    channels: u32,
    cfg: &RewiringConfig,
    rng: &mut R,
) -> ThresholdOutcome {
    apply_thresholds_with(state, cfg, |u| units[u] = redraw_unit(channels, cfg, rng))
}

fn apply_thresholds_with(
    state: &mut LongevityState,
    cfg: &RewiringConfig,
    mut redraw: impl FnMut(usize),
) -> ThresholdOutcome {
    let mut out = ThresholdOutcome::default();
    for u in 0..state.n_units() {
        if state.status[u] != FreezeStatus::Free {
            continue;
        }
        let l = state.longevity[u];
        if l <= cfg.theta_low {
            redraw(u);
            state.longevity[u] = 0.0;
            out.rewired.push(u);
        } else if l >= cfg.theta_high {
            state.status[u] = FreezeStatus::TempFrozen;
            out.temp_frozen.push(u);
        }
    }
    out
}

/// Probabilities of drawing `N_S = k` for `k` in `[min, max]`,
/// proportional to `0.3^k`.
pub fn spine_probabilities(min: usize, max: usize) -> Vec<f64> {
    let weights: Vec<f64> = (min..=max).map(|k| libm::pow(0.3, k as f64)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn draw_spines<R: Rng + ?Sized>(cfg: &RewiringConfig, rng: &mut R) -> usize {
    if cfg.spine_min == cfg.spine_max {
        return cfg.spine_min;
    }
    let probs = spine_probabilities(cfg.spine_min, cfg.spine_max);
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return cfg.spine_min + i;
        }
    }
    cfg.spine_max
}

/// Draws a random sequence: spine count from the `0.3^k` multinomial,
/// origins uniform over the channels, intervals uniform in
/// `[1, interval_upper_bound]`.
pub fn redraw_unit<R: Rng + ?Sized>(channels: u32, cfg: &RewiringConfig, rng: &mut R) -> SequenceSpec {
    redraw_with_bound(channels, cfg, |_| cfg.interval_upper_bound, rng)
}

/// Like [`redraw_unit`] but bounds intervals by `sample_len / (N_S - 1)`.
pub fn redraw_unit_for_length<R: Rng + ?Sized>(
    channels: u32,
    cfg: &RewiringConfig,
    sample_len: u32,
    rng: &mut R,
) -> SequenceSpec {
    redraw_with_bound(channels, cfg, |n| (sample_len / (n as u32 - 1)).max(1), rng)
}

fn redraw_with_bound<R: Rng + ?Sized>(
    channels: u32,
    cfg: &RewiringConfig,
    bound: impl Fn(usize) -> u32,
    rng: &mut R,
) -> SequenceSpec {
    let n = draw_spines(cfg, rng);
    let max_dt = bound(n).max(1);
    let origins = (0..n).map(|_| rng.gen_range(0..channels)).collect();
    let intervals = (1..n).map(|_| rng.gen_range(1..=max_dt)).collect();
    SequenceSpec::new(origins, intervals).expect("drawn sequence is valid")
}

/// Per-unit, per-class spike counts of a validation batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectivityStats {
    spikes: Vec<Vec<u64>>,
    class_samples: Vec<u64>,
}

impl SelectivityStats {
    pub fn new(n_units: usize, n_classes: usize) -> Self {
        Self {
            spikes: vec![vec![0; n_classes]; n_units],
            class_samples: vec![0; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_samples.len()
    }

    /// Records one sample given every unit's spike count on it.
    pub fn record(&mut self, unit_counts: &[u32], label: usize) {
        self.class_samples[label] += 1;
        for (row, &k) in self.spikes.iter_mut().zip(unit_counts) {
            row[label] += k as u64;
        }
    }

    pub fn record_unit(&mut self, unit: usize, count: u32, label: usize) {
        self.spikes[unit][label] += count as u64;
    }

    pub fn record_sample(&mut self, label: usize) {
        self.class_samples[label] += 1;
    }

    /// Occurrences `o_i = n_S^i / n_i` of one unit.
    pub fn occurrences(&self, unit: usize) -> Result<Vec<f64>> {
        if let Some(c) = self.class_samples.iter().position(|&n| n == 0) {
            return Err(Error::Config(format!(
                "class {c} has no samples in the validation batch"
            )));
        }
        Ok(self.spikes[unit]
            .iter()
            .zip(&self.class_samples)
            .map(|(&s, &n)| s as f64 / n as f64)
            .collect())
    }

    /// Selectivities `S_i = o_i / Σ_j o_j`; all zero if the unit never fired.
    pub fn selectivity(&self, unit: usize) -> Result<Vec<f64>> {
        Ok(normalize_occurrences(&self.occurrences(unit)?))
    }
}

/// Normalizes an occurrence vector into selectivities.
pub fn normalize_occurrences(occ: &[f64]) -> Vec<f64> {
    let total: f64 = occ.iter().sum();
    if total > 0.0 {
        occ.iter().map(|o| o / total).collect()
    } else {
        vec![0.0; occ.len()]
    }
}

/// Selectivity vectors of every unit in `stats`.
pub fn compute_selectivity(stats: &SelectivityStats) -> Result<Vec<Vec<f64>>> {
    (0..stats.spikes.len()).map(|u| stats.selectivity(u)).collect()
}

/// Returns the class a unit is selective for, if any. Ties in the argmax go
/// to the lowest class index.
pub fn criterion_check(selectivity: &[f64], cfg: &RewiringConfig) -> Option<usize> {
    if selectivity.is_empty() {
        return None;
    }
    let mut best = 0;
    for (i, &s) in selectivity.iter().enumerate() {
        if s > selectivity[best] {
            best = i;
        }
    }
    passes(selectivity, best, cfg).then_some(best)
}

/// Every class the unit passes the criterion for, most selective first
/// (ties to the lower index). Below `θ_S = 0.5` a unit can be selective
/// towards several classes.
pub fn selective_classes(selectivity: &[f64], cfg: &RewiringConfig) -> Vec<usize> {
    let mut classes: Vec<usize> = (0..selectivity.len())
        .filter(|&i| passes(selectivity, i, cfg))
        .collect();
    classes.sort_by(|&a, &b| selectivity[b].total_cmp(&selectivity[a]).then(a.cmp(&b)));
    classes
}

fn passes(selectivity: &[f64], i: usize, cfg: &RewiringConfig) -> bool {
    let s = selectivity[i];
    if !(s > cfg.theta_s) {
        return false;
    }
    if cfg.criterion == Criterion::ThresholdAndGap {
        let rival = selectivity
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max);
        return s - cfg.epsilon_s > rival;
    }
    true
}

/// `n_in^N_S · floor(t_max / (N_S - 1))^(N_S - 1)`.
pub fn count_possible_sequences(n_in: u64, n_spines: u32, t_max: u64) -> Result<BigUint> {
    if n_spines < 2 {
        return Err(Error::Contract(format!(
            "need at least 2 spines, got {n_spines}"
        )));
    }
    let spatial = BigUint::from(n_in).pow(n_spines);
    let temporal = BigUint::from(t_max / (n_spines as u64 - 1)).pow(n_spines - 1);
    Ok(spatial * temporal)
}

/// Result of a rewiring run.
#[derive(Debug, Clone, PartialEq)]
pub struct RewiringOutcome {
    /// Permanently frozen units in slot order.
    pub units: Vec<SequenceSpec>,
    /// Class each returned unit was assigned to.
    pub classes: Vec<usize>,
    /// The batch budget ran out before every quota was filled.
    pub exhausted: bool,
    /// Classes whose quota is still open.
    pub unfilled: Vec<usize>,
    pub batches: usize,
    pub redraws: usize,
}

/// Per-class quotas: `n_units / n_classes` each, remainder round-robin.
pub fn class_quotas(n_units: usize, n_classes: usize) -> Vec<usize> {
    (0..n_classes)
        .map(|c| n_units / n_classes + usize::from(c < n_units % n_classes))
        .collect()
}

struct Search<'a, R: Rng + ?Sized> {
    data: &'a [LabeledSample],
    channels: u32,
    cfg: &'a RewiringConfig,
    rng: &'a mut R,
    units: Vec<SequenceSpec>,
    state: LongevityState,
    /// `cache[u * n_samples + i]`: spike count of unit `u` on sample `i`.
    cache: Vec<u32>,
    /// Per-sample bitsets, built on first use when `ΔT = 0`.
    bits: Vec<Option<ChannelBits>>,
    redraws: usize,
}

const UNCACHED: u32 = u32::MAX;

impl<R: Rng + ?Sized> Search<'_, R> {
    fn spikes(&mut self, u: usize, i: usize) -> u32 {
        let slot = u * self.data.len() + i;
        if self.cache[slot] == UNCACHED {
            let core = &self.cfg.core;
            let stream = &self.data[i].stream;
            let n = if core.accept_window == 0 {
                let bits = self.bits[i].get_or_insert_with(|| ChannelBits::new(stream));
                exact_spike_count(&self.units[u], bits, core.refractory)
            } else {
                unit_run(&self.units[u], stream, core).map(|t| t.len() as u32).unwrap_or(0)
            };
            self.cache[slot] = n;
        }
        self.cache[slot]
    }

    fn redraw(&mut self, u: usize, max_len: Option<u32>) {
        self.units[u] = match max_len {
            Some(len) => redraw_unit_for_length(self.channels, self.cfg, len, self.rng),
            None => redraw_unit(self.channels, self.cfg, self.rng),
        };
        let n = self.data.len();
        self.cache[u * n..(u + 1) * n].fill(UNCACHED);
        self.state.longevity[u] = 0.0;
        self.state.status[u] = FreezeStatus::Free;
        self.redraws += 1;
    }
}

/// Searches `n_units_target` selective sequences, `n_units_target /
/// n_classes` per class. Samples labelled `None` are ignored.
pub fn run_rewiring_phase<R: Rng + ?Sized>(
    data: &[LabeledSample],
    n_classes: usize,
    channels: u32,
    n_units_target: usize,
    cfg: &RewiringConfig,
    rng: &mut R,
) -> Result<RewiringOutcome> {
    cfg.validate()?;
    let mut outcome = RewiringOutcome {
        units: Vec::new(),
        classes: Vec::new(),
        exhausted: false,
        unfilled: Vec::new(),
        batches: 0,
        redraws: 0,
    };
    if n_units_target == 0 {
        return Ok(outcome);
    }
    if n_classes == 0 {
        return Err(Error::Config("need at least one class".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, s) in data.iter().enumerate() {
        if let Some(label) = s.label {
            if label >= n_classes {
                return Err(Error::Contract(format!("label {label} out of range")));
            }
            by_class[label].push(i);
        }
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!("class {c} has no training samples")));
    }

    let quotas = class_quotas(n_units_target, n_classes);
    let mut filled = vec![0usize; n_classes];
    let mut assigned: Vec<Option<usize>> = vec![None; n_units_target];

    let units = (0..n_units_target)
        .map(|_| redraw_unit(channels, cfg, rng))
        .collect();
    let mut search = Search {
        data,
        channels,
        cfg,
        rng,
        units,
        state: LongevityState::new(n_units_target),
        cache: vec![UNCACHED; n_units_target * data.len()],
        bits: vec![None; data.len()],
        redraws: 0,
    };

    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut open_prev: Vec<usize> = Vec::new();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    while outcome.batches < cfg.max_batches {
        let open: Vec<usize> = (0..n_classes).filter(|&c| filled[c] < quotas[c]).collect();
        if open.is_empty() {
            break;
        }
        let pool: Vec<usize> = open.iter().flat_map(|&c| by_class[c].iter().copied()).collect();
        if open != open_prev {
            queue.clear();
            open_prev = open.clone();
        }
        let max_len = cfg
            .adaptive_interval_bound
            .then(|| pool.iter().map(|&i| data[i].stream.content_len()).max().unwrap_or(1));

        batch.clear();
        while batch.len() < cfg.batch_size {
            if queue.is_empty() {
                let mut refill = pool.clone();
                refill.shuffle(search.rng);
                queue.extend(refill);
            }
            batch.push(queue.pop_front().expect("pool is nonempty"));
        }
        outcome.batches += 1;

        let mut occurrences = vec![0usize; n_units_target];
        for u in 0..n_units_target {
            if search.state.status[u] != FreezeStatus::Free {
                continue;
            }
            occurrences[u] = batch.iter().filter(|&&i| search.spikes(u, i) > 0).count();
        }
        update_longevity(&mut search.state, &occurrences, batch.len(), cfg)?;

        let mut to_redraw = Vec::new();
        let crossed = apply_thresholds_with(&mut search.state, cfg, |u| to_redraw.push(u));
        for u in to_redraw {
            search.redraw(u, max_len);
        }
        if crossed.temp_frozen.is_empty() {
            continue;
        }

        // Validate every temporarily frozen unit on a stratified batch.
        let mut validation = Vec::new();
        for members in &by_class {
            let k = cfg.validation_per_class.max(1).min(members.len());
            validation.extend(members.choose_multiple(search.rng, k).copied());
        }
        let frozen: Vec<usize> = (0..n_units_target)
            .filter(|&u| search.state.status[u] == FreezeStatus::TempFrozen)
            .collect();
        let mut stats = SelectivityStats::new(n_units_target, n_classes);
        for &i in &validation {
            let label = data[i].label.expect("validation draws labelled samples");
            stats.record_sample(label);
            for &u in &frozen {
                let k = search.spikes(u, i);
                stats.record_unit(u, k, label);
            }
        }
        for u in frozen {
            let selectivity = stats.selectivity(u)?;
            let open = selective_classes(&selectivity, cfg)
                .into_iter()
                .find(|&c| filled[c] < quotas[c]);
            match open {
                Some(c) => {
                    search.state.status[u] = FreezeStatus::PermFrozen;
                    assigned[u] = Some(c);
                    filled[c] += 1;
                }
                _ => search.redraw(u, max_len),
            }
        }
    }

    outcome.unfilled = (0..n_classes).filter(|&c| filled[c] < quotas[c]).collect();
    outcome.exhausted = !outcome.unfilled.is_empty();
    outcome.redraws = search.redraws;
    for (u, spec) in search.units.into_iter().enumerate() {
        if let Some(c) = assigned[u] {
            outcome.units.push(spec.with_status(FreezeStatus::PermFrozen));
            outcome.classes.push(c);
        }
    }
    Ok(outcome)
}
