//! First-order CMOS scaling used to compare hardware across process nodes.
//!
//! Dynamic energy scales with `C V^2` and capacitance with feature size;
//! area scales quadratically with the node. Latency is not normalized.

use alloc::format;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareMetrics {
    pub energy: f64,
    pub area: f64,
    /// Technology node in nm.
    pub node: f64,
    /// Supply voltage in V.
    pub voltage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedMetrics {
    pub energy: f64,
    pub area: f64,
}

/// Scales energy and area of `orig` to the reference node and voltage.
pub fn normalize_metrics(orig: &HardwareMetrics, node_ref: f64, v_ref: f64) -> Result<NormalizedMetrics> {
    let inputs = [
        ("energy", orig.energy),
        ("area", orig.area),
        ("node", orig.node),
        ("voltage", orig.voltage),
        ("reference node", node_ref),
        ("reference voltage", v_ref),
    ];
    for (name, v) in inputs {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    let node_ratio = node_ref / orig.node;
    let v_ratio = v_ref / orig.voltage;
    Ok(NormalizedMetrics {
        energy: orig.energy * node_ratio * v_ratio * v_ratio,
        area: orig.area * node_ratio * node_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(energy: f64, area: f64, node: f64, voltage: f64) -> HardwareMetrics {
        HardwareMetrics {
            energy,
            area,
            node,
            voltage,
        }
    }

    #[test]
    fn identity_at_reference() {
        let n = normalize_metrics(&m(3.5, 2.0, 22.0, 0.8), 22.0, 0.8).unwrap();
        assert_eq!((n.energy, n.area), (3.5, 2.0));
    }

    #[test]
    fn node_scaling() {
        let n = normalize_metrics(&m(1.0, 1.0, 28.0, 0.9), 22.0, 0.9).unwrap();
        assert!((n.energy - 22.0 / 28.0).abs() < 1e-15);
        assert!((n.area - (22.0f64 / 28.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn voltage_halved_quarters_energy() {
        let n = normalize_metrics(&m(8.0, 5.0, 22.0, 1.0), 22.0, 0.5).unwrap();
        assert_eq!(n.energy, 2.0);
        assert_eq!(n.area, 5.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(normalize_metrics(&m(0.0, 1.0, 22.0, 1.0), 22.0, 1.0).is_err());
        assert!(normalize_metrics(&m(1.0, 1.0, 22.0, 1.0), -1.0, 1.0).is_err());
        assert!(normalize_metrics(&m(1.0, 1.0, 22.0, f64::NAN), 22.0, 1.0).is_err());
    }
}
