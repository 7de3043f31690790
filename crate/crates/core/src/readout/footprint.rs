use crate::error::{Error, Result};

/// Memory footprint of a network in bits, split by contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    /// One bit per binary input connection (one per spine).
    pub input_connections: f64,
    pub output_weights: f64,
    /// 8-bit inter-spike intervals.
    pub intervals: f64,
    /// Unit buffers sized from the mean spine count.
    pub unit_state: f64,
    /// 8-bit integrator per class.
    pub integrator_state: f64,
}

impl Footprint {
    pub fn total(&self) -> f64 {
        self.input_connections
            + self.output_weights
            + self.intervals
            + self.unit_state
            + self.integrator_state
    }
}

/// Evaluates the footprint for a network whose unit `u` has `spines[u]`
/// spines. `sample_len` is the number of timesteps per sample.
///
/// The state term uses the per-unit stage count as a factor but the network
/// mean spine count in the divisor: `(N_S - 1) * floor(L / (mean(N_S) - 1))`.
pub fn memory_footprint(
    spines: &[usize],
    n_classes: usize,
    prune_rate: f64,
    weight_bits: u32,
    sample_len: u64,
) -> Result<Footprint> {
    let n_units = spines.len();
    let total_spines: usize = spines.iter().sum();
    let mean = total_spines as f64 / n_units as f64;
    if !(mean > 1.0) {
        return Err(Error::Contract(alloc::format!(
            "mean spine count must exceed 1, got {mean}"
        )));
    }
    if !(0.0..=1.0).contains(&prune_rate) {
        return Err(Error::Contract(alloc::format!(
            "prune rate {prune_rate} outside [0, 1]"
        )));
    }
    let total_stages = (total_spines - n_units) as f64;
    // floor(L / (mean - 1)) without rounding the mean: floor(L n / (Σ N_S - n)).
    let slots = (sample_len as u128 * n_units as u128 / (total_spines - n_units) as u128) as f64;
    Ok(Footprint {
        input_connections: total_spines as f64,
        output_weights: n_units as f64 * (1.0 - prune_rate) * n_classes as f64 * weight_bits as f64,
        intervals: 8.0 * total_stages,
        unit_state: total_stages * slots,
        integrator_state: 8.0 * n_classes as f64,
    })
}
