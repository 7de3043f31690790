use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{argmax, CountSample, ReadoutModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of the remaining weights removed per pruning step.
    pub prune_step_fraction: f64,
    pub finetune_epochs_per_step: usize,
    /// Target pruning rate `r_p` in `[0, 1)`.
    pub target_prune_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            epochs: 100,
            batch_size: 50,
            prune_step_fraction: 0.05,
            finetune_epochs_per_step: 1,
            target_prune_rate: 0.0,
        }
    }
}

/// Adaptive-moment optimizer with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl AdamW {
    pub fn new(n_params: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            weight_decay: cfg.weight_decay,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    /// One update; entries with `mask == false` are left untouched.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64], mask: &[bool]) {
        self.step += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        for i in 0..params.len() {
            if !mask[i] {
                continue;
            }
            let g = grad[i];
            params[i] -= self.lr * self.weight_decay * params[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

fn check_samples(model: &ReadoutModel, samples: &[CountSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in samples {
        if s.counts.len() != model.n_units() {
            return Err(Error::ShapeMismatch {
                what: "sample counts",
                expected: model.n_units(),
                actual: s.counts.len(),
            });
        }
        if s.label >= model.n_classes() {
            return Err(Error::Contract(alloc::format!(
                "label {} out of range for {} classes",
                s.label,
                model.n_classes()
            )));
        }
    }
    Ok(())
}

/// Mean softmax cross-entropy over `batch` and its gradient with respect to
/// the weights. Pruned entries get a zero gradient.
pub fn loss_and_grad(model: &ReadoutModel, batch: &[&CountSample]) -> (f64, Vec<f64>) {
    let n_units = model.n_units();
    let n_classes = model.n_classes();
    let mut grad = vec![0.0; n_units * n_classes];
    let mut loss = 0.0;
    let mut probs = vec![0.0; n_classes];
    for sample in batch {
        let scores = super::scores_with(model.weights(), n_classes, &sample.counts);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (p, &s) in probs.iter_mut().zip(&scores) {
            *p = libm::exp(s - max);
            z += *p;
        }
        loss += libm::log(z) + max - scores[sample.label];
        for (c, p) in probs.iter_mut().enumerate() {
            *p /= z;
            let delta = *p - if c == sample.label { 1.0 } else { 0.0 };
            let row = &mut grad[c * n_units..(c + 1) * n_units];
            for (g, &k) in row.iter_mut().zip(&sample.counts) {
                if k > 0 {
                    *g += delta * k as f64;
                }
            }
        }
    }
    let n = batch.len().max(1) as f64;
    for (g, &keep) in grad.iter_mut().zip(model.mask()) {
        *g = if keep { *g / n } else { 0.0 };
    }
    (loss / n, grad)
}

fn evaluate(model: &ReadoutModel, samples: &[CountSample]) -> EpochStats {
    let refs: Vec<&CountSample> = samples.iter().collect();
    let (loss, _) = loss_and_grad(model, &refs);
    let correct = samples
        .iter()
        .filter(|s| {
            argmax(&super::scores_with(model.weights(), model.n_classes(), &s.counts)) == s.label
        })
        .count();
    EpochStats {
        loss,
        accuracy: correct as f64 / samples.len() as f64,
    }
}

fn run_epochs<R: Rng + ?Sized>(
    model: &mut ReadoutModel,
    samples: &[CountSample],
    cfg: &TrainConfig,
    epochs: usize,
    opt: &mut AdamW,
    rng: &mut R,
    history: &mut TrainHistory,
) {
    let batch_size = cfg.batch_size.max(1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&CountSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (_, grad) = loss_and_grad(model, &batch);
            let (weights, mask) = (&mut model.weights, &model.mask);
            opt.update(weights, &grad, mask);
            model.apply_mask();
        }
        history.epochs.push(evaluate(model, samples));
    }
}

/// Trains the readout with mini-batch AdamW on softmax cross-entropy.
pub fn train<R: Rng + ?Sized>(
    model: &mut ReadoutModel,
    samples: &[CountSample],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainHistory> {
    check_samples(model, samples)?;
    let mut opt = AdamW::new(model.weights().len(), cfg);
    let mut history = TrainHistory::default();
    run_epochs(model, samples, cfg, cfg.epochs, &mut opt, rng, &mut history);
    model.clear_quantized();
    Ok(history)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneReport {
    pub steps: usize,
    pub pruned_fraction: f64,
    pub history: TrainHistory,
}

/// Iterative global magnitude pruning: each step removes the smallest
/// `prune_step_fraction` of the remaining weights and finetunes, until the
/// pruned fraction reaches `target_prune_rate`.
pub fn prune_iterative<R: Rng + ?Sized>(
    model: &mut ReadoutModel,
    samples: &[CountSample],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<PruneReport> {
    if !(0.0..1.0).contains(&cfg.target_prune_rate) {
        return Err(Error::Config(alloc::format!(
            "target prune rate {} outside [0, 1)",
            cfg.target_prune_rate
        )));
    }
    let total = model.mask().len();
    let target = libm::ceil(cfg.target_prune_rate * total as f64) as usize;
    let mut report = PruneReport {
        pruned_fraction: model.pruned_fraction(),
        ..Default::default()
    };
    let mut pruned = model.mask().iter().filter(|&&m| !m).count();
    if target <= pruned {
        return Ok(report);
    }
    check_samples(model, samples)?;
    let mut opt = AdamW::new(total, cfg);
    while pruned < target {
        let remaining = total - pruned;
        let step = (libm::ceil(cfg.prune_step_fraction * remaining as f64) as usize)
            .max(1)
            .min(target - pruned);
        let mut candidates: Vec<usize> = (0..total).filter(|&i| model.mask()[i]).collect();
        candidates.sort_by(|&a, &b| {
            model.weights()[a]
                .abs()
                .total_cmp(&model.weights()[b].abs())
                .then(a.cmp(&b))
        });
        for &i in &candidates[..step] {
            model.mask_mut()[i] = false;
        }
        model.apply_mask();
        pruned += step;
        report.steps += 1;
        run_epochs(
            model,
            samples,
            cfg,
            cfg.finetune_epochs_per_step,
            &mut opt,
            rng,
            &mut report.history,
        );
    }
    model.clear_quantized();
    report.pruned_fraction = model.pruned_fraction();
    Ok(report)
}
