//! Linear readout into per-class integrator units.
//!
//! Hidden spikes are binary and the integrators are perfect sums, so the
//! score of class `i` after the last timestep is `Σ_u W[i][u] · count_u`.
//! Training therefore reduces to softmax regression on spike counts.

mod footprint;
mod train;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

pub use footprint::{memory_footprint, Footprint};
pub use train::{
    loss_and_grad, prune_iterative, train, AdamW, EpochStats, PruneReport, TrainConfig,
    TrainHistory,
};

use crate::error::{Error, Result};
use crate::unit::HiddenRaster;

/// Spike counts of one sample with its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSample {
    pub counts: Vec<u32>,
    pub label: usize,
}

impl CountSample {
    pub fn from_raster(raster: &HiddenRaster, label: usize) -> Self {
        Self {
            counts: raster.counts(),
            label,
        }
    }
}

/// Weight representation used by a forward pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Float,
    Int8,
}

/// Symmetric per-tensor int8 twin of the weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedWeights {
    pub values: Vec<i8>,
    pub scale: f64,
    pub zero_point: i8,
}

impl QuantizedWeights {
    pub fn dequantize(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&q| (q as i32 - self.zero_point as i32) as f64 * self.scale)
            .collect()
    }
}

/// Prediction with null-class detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Class(usize),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    n_classes: usize,
    n_units: usize,
    /// Row-major `n_classes x n_units`.
    weights: Vec<f64>,
    /// `true` where the weight is kept.
    mask: Vec<bool>,
    quantized: Option<QuantizedWeights>,
    null_thresholds: Option<Vec<f64>>,
}

impl ReadoutModel {
    pub fn zeros(n_classes: usize, n_units: usize) -> Self {
        let n = n_classes * n_units;
        Self {
            n_classes,
            n_units,
            weights: vec![0.0; n],
            mask: vec![true; n],
            quantized: None,
            null_thresholds: None,
        }
    }

    /// Uniform initialization in `±1/sqrt(n_units)`.
    pub fn random<R: Rng + ?Sized>(n_classes: usize, n_units: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(n_classes, n_units);
        if n_units > 0 {
            let bound = 1.0 / libm::sqrt(n_units as f64);
            for w in &mut model.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        model
    }

    pub fn from_parts(
        n_classes: usize,
        n_units: usize,
        weights: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let n = n_classes * n_units;
        for (what, len) in [("weights", weights.len()), ("mask", mask.len())] {
            if len != n {
                return Err(Error::ShapeMismatch {
                    what,
                    expected: n,
                    actual: len,
                });
            }
        }
        let mut model = Self {
            n_classes,
            n_units,
            weights,
            mask,
            quantized: None,
            null_thresholds: None,
        };
        model.apply_mask();
        Ok(model)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, class: usize, unit: usize) -> f64 {
        self.weights[class * self.n_units + unit]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn quantized(&self) -> Option<&QuantizedWeights> {
        self.quantized.as_ref()
    }

    pub fn set_quantized(&mut self, q: QuantizedWeights) -> Result<()> {
        if q.values.len() != self.weights.len() {
            return Err(Error::ShapeMismatch {
                what: "quantized weights",
                expected: self.weights.len(),
                actual: q.values.len(),
            });
        }
        self.quantized = Some(q);
        Ok(())
    }

    pub fn null_thresholds(&self) -> Option<&[f64]> {
        self.null_thresholds.as_deref()
    }

    pub fn set_null_thresholds(&mut self, thresholds: Vec<f64>) -> Result<()> {
        if thresholds.len() != self.n_classes {
            return Err(Error::ShapeMismatch {
                what: "null thresholds",
                expected: self.n_classes,
                actual: thresholds.len(),
            });
        }
        self.null_thresholds = Some(thresholds);
        Ok(())
    }

    /// Fraction of weights removed by pruning.
    pub fn pruned_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|&&m| !m).count() as f64 / self.mask.len() as f64
    }

    /// Subtracts each unit's mean weight across classes. Adding the same
    /// value to every class for one unit shifts all scores equally, so
    /// softmax outputs and predictions are unchanged; null thresholds are
    /// not, and should be calibrated afterwards. Columns containing pruned
    /// entries are left alone.
    pub fn center_columns(&mut self) {
        let (n_classes, n_units) = (self.n_classes, self.n_units);
        for u in 0..n_units {
            if (0..n_classes).any(|c| !self.mask[c * n_units + u]) {
                continue;
            }
            let mean = (0..n_classes).map(|c| self.weights[c * n_units + u]).sum::<f64>() / n_classes as f64;
            for c in 0..n_classes {
                self.weights[c * n_units + u] -= mean;
            }
        }
        self.quantized = None;
        self.null_thresholds = None;
    }

    pub(crate) fn mask_mut(&mut self) -> &mut [bool] {
        &mut self.mask
    }

    pub(crate) fn apply_mask(&mut self) {
        for (w, &keep) in self.weights.iter_mut().zip(&self.mask) {
            if !keep {
                *w = 0.0;
            }
        }
    }

    fn effective_weights(&self, precision: Precision) -> Result<Vec<f64>> {
        match precision {
            Precision::Float => Ok(self.weights.clone()),
            Precision::Int8 => self
                .quantized
                .as_ref()
                .map(QuantizedWeights::dequantize)
                .ok_or_else(|| Error::Contract("model has no int8 twin".into())),
        }
    }

    fn check_width(&self, len: usize) -> Result<()> {
        if len != self.n_units {
            return Err(Error::ShapeMismatch {
                what: "hidden layer width",
                expected: self.n_units,
                actual: len,
            });
        }
        Ok(())
    }

    /// Class scores for per-unit spike counts.
    pub fn scores(&self, counts: &[u32], precision: Precision) -> Result<Vec<f64>> {
        self.check_width(counts.len())?;
        let weights = self.effective_weights(precision)?;
        Ok(scores_with(&weights, self.n_classes, counts))
    }

    /// Final-step integrator outputs for a hidden raster.
    pub fn forward(&self, raster: &HiddenRaster) -> Result<Vec<f64>> {
        self.scores(&raster.counts(), Precision::Float)
    }

    pub fn forward_with(&self, raster: &HiddenRaster, precision: Precision) -> Result<Vec<f64>> {
        self.scores(&raster.counts(), precision)
    }

    /// Plain argmax prediction (ties go to the lowest class index).
    pub fn predict(&self, counts: &[u32], precision: Precision) -> Result<usize> {
        Ok(argmax(&self.scores(counts, precision)?))
    }

    /// Argmax over classes whose score reaches their threshold, or
    /// [`Prediction::Null`] when every score is below its threshold.
    pub fn predict_with_null(&self, counts: &[u32], precision: Precision) -> Result<Prediction> {
        let thresholds = self
            .null_thresholds
            .as_ref()
            .ok_or_else(|| Error::Contract("null thresholds are not calibrated".into()))?;
        let scores = self.scores(counts, precision)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, (&s, &thr)) in scores.iter().zip(thresholds).enumerate() {
            if s >= thr && best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        Ok(best.map_or(Prediction::Null, |(i, _)| Prediction::Class(i)))
    }

    /// Sets each class threshold to the `quantile` of that class's
    /// true-class scores over `samples` (lower nearest rank).
    pub fn calibrate_null_thresholds(
        &mut self,
        samples: &[CountSample],
        quantile: f64,
        precision: Precision,
    ) -> Result<()> {
        if !(0.0..=1.0).contains(&quantile) {
            return Err(Error::Config(format!("quantile {quantile} outside [0, 1]")));
        }
        let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); self.n_classes];
        for s in samples {
            if s.label >= self.n_classes {
                return Err(Error::Contract(format!("label {} out of range", s.label)));
            }
            let scores = self.scores(&s.counts, precision)?;
            per_class[s.label].push(scores[s.label]);
        }
        let mut thresholds = Vec::with_capacity(self.n_classes);
        for (class, mut values) in per_class.into_iter().enumerate() {
            if values.is_empty() {
                return Err(Error::Config(format!(
                    "calibration split has no samples of class {class}"
                )));
            }
            values.sort_by(f64::total_cmp);
            let idx = libm::floor(quantile * (values.len() - 1) as f64) as usize;
            thresholds.push(values[idx]);
        }
        self.null_thresholds = Some(thresholds);
        Ok(())
    }

    /// Builds the int8 twin: `scale = max|W| / 127`, `q = round(W / scale)`.
    /// An all-zero matrix uses scale 1.
    pub fn quantize_int8(&mut self) -> &QuantizedWeights {
        let max_abs = self.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let scale = if max_abs > 0.0 { max_abs / 127.0 } else { 1.0 };
        let values = self
            .weights
            .iter()
            .map(|&w| libm::round(w / scale).clamp(-127.0, 127.0) as i8)
            .collect();
        self.quantized.insert(QuantizedWeights {
            values,
            scale,
            zero_point: 0,
        })
    }

    pub(crate) fn clear_quantized(&mut self) {
        self.quantized = None;
    }
}

fn scores_with(weights: &[f64], n_classes: usize, counts: &[u32]) -> Vec<f64> {
    let n_units = counts.len();
    (0..n_classes)
        .map(|c| {
            let row = &weights[c * n_units..(c + 1) * n_units];
            row.iter()
                .zip(counts)
                .filter(|(_, &k)| k > 0)
                .map(|(w, &k)| w * k as f64)
                .sum()
        })
        .collect()
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-class accumulators stepped one hidden-raster row at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorState {
    acc: Vec<f64>,
}

impl IntegratorState {
    pub fn new(n_classes: usize) -> Self {
        Self {
            acc: vec![0.0; n_classes],
        }
    }

    pub fn reset(&mut self) {
        self.acc.iter_mut().for_each(|a| *a = 0.0);
    }

    /// Adds the weighted spikes of one timestep.
    pub fn step(&mut self, model: &ReadoutModel, row: &[bool]) -> Result<()> {
        model.check_width(row.len())?;
        for (u, _) in row.iter().enumerate().filter(|(_, &b)| b) {
            for (c, acc) in self.acc.iter_mut().enumerate() {
                *acc += model.weight(c, u);
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn silent_raster_scores_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = ReadoutModel::random(3, 4, &mut rng);
        let raster = HiddenRaster::new(10, 4);
        assert_eq!(model.forward(&raster).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn single_unit_scales_its_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = ReadoutModel::random(3, 4, &mut rng);
        let raster = HiddenRaster::from_columns(
            10,
            vec![vec![], vec![], vec![1, 4, 7], vec![]],
        )
        .unwrap();
        let scores = model.forward(&raster).unwrap();
        for c in 0..3 {
            assert_eq!(scores[c], 3.0 * model.weight(c, 2));
        }
    }

    #[test]
    fn centering_keeps_score_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = ReadoutModel::random(4, 6, &mut rng);
        let counts = [3, 0, 1, 2, 5, 1];
        let before = model.scores(&counts, Precision::Float).unwrap();
        model.center_columns();
        let after = model.scores(&counts, Precision::Float).unwrap();
        let shift = before[0] - after[0];
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a - shift).abs() < 1e-12);
        }
        for u in 0..6 {
            let sum: f64 = (0..4).map(|c| model.weight(c, u)).sum();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch() {
        let model = ReadoutModel::zeros(2, 3);
        assert!(matches!(
            model.scores(&[1, 2], Precision::Float),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(model.scores(&[1, 2, 3], Precision::Int8).is_err());
    }

    #[test]
    fn quantization_substitution() {
        let mut model =
            ReadoutModel::from_parts(1, 3, vec![1.27, 0.5, -0.004], vec![true; 3]).unwrap();
        let q = model.quantize_int8().clone();
        assert!((q.scale - 0.01).abs() < 1e-15);
        assert_eq!(q.values, vec![127, 50, 0]);
        assert_eq!(q.zero_point, 0);
    }

    #[test]
    fn all_zero_weights_quantize_with_unit_scale() {
        let mut model = ReadoutModel::zeros(2, 2);
        let q = model.quantize_int8();
        assert_eq!(q.scale, 1.0);
        assert!(q.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn null_prediction_rules() {
        let mut model =
            ReadoutModel::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![true; 4]).unwrap();
        assert!(model.predict_with_null(&[0, 0], Precision::Float).is_err());
        model.set_null_thresholds(vec![2.0, 2.0]).unwrap();
        assert_eq!(model.predict_with_null(&[0, 0], Precision::Float).unwrap(), Prediction::Null);
        assert_eq!(
            model.predict_with_null(&[5, 1], Precision::Float).unwrap(),
            Prediction::Class(0)
        );
        assert_eq!(
            model.predict_with_null(&[1, 3], Precision::Float).unwrap(),
            Prediction::Class(1)
        );
        // Tie between eligible classes goes to the lower index.
        assert_eq!(
            model.predict_with_null(&[3, 3], Precision::Float).unwrap(),
            Prediction::Class(0)
        );
        // Class 0 is larger but below its own threshold.
        model.set_null_thresholds(vec![10.0, 1.0]).unwrap();
        assert_eq!(
            model.predict_with_null(&[5, 1], Precision::Float).unwrap(),
            Prediction::Class(1)
        );
    }

    #[test]
    fn calibration_takes_lower_quantile() {
        let mut model = ReadoutModel::from_parts(2, 1, vec![1.0, -1.0], vec![true; 2]).unwrap();
        let samples: Vec<_> = (1..=21)
            .map(|k| CountSample {
                counts: vec![k],
                label: 0,
            })
            .chain(core::iter::once(CountSample {
                counts: vec![0],
                label: 1,
            }))
            .collect();
        model
            .calibrate_null_thresholds(&samples, 0.05, Precision::Float)
            .unwrap();
        assert_eq!(model.null_thresholds().unwrap(), &[2.0, 0.0]);
        let missing = &samples[..3];
        assert!(model
            .calibrate_null_thresholds(missing, 0.05, Precision::Float)
            .is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
