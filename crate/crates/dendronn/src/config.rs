//! Run configuration: one JSON document per experiment. Unknown keys are
//! rejected everywhere; omitted keys take the defaults below.

use std::path::{Path, PathBuf};

use dendronn_core::data::NoiseKind;
use dendronn_core::readout::TrainConfig;
use dendronn_core::rewiring::{Criterion, RewiringConfig};
use dendronn_core::timewheel::MAX_SPINES;
use dendronn_core::CoreConfig;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::formats::read_json_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub rewiring: RewiringSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub null: NullSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Morse-coded words; the built-in word lists unless overridden.
    Neuromorse {
        #[serde(default)]
        train_words: Option<Vec<String>>,
        #[serde(default)]
        null_words: Option<Vec<String>>,
        /// Noise applied to the evaluation split only.
        #[serde(default)]
        eval_noise: Option<NoiseSpec>,
    },
    /// Sequential digit images from an IDX image/label pair.
    Smnist {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        limit: Option<usize>,
        #[serde(default)]
        permuted: bool,
        /// Fraction of samples in the train split; the rest is eval.
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
    /// Raw microsecond recordings listed in a manifest, binned and sliced.
    Shd {
        manifest: PathBuf,
        #[serde(default = "default_shd_channels")]
        in_channels: u32,
        #[serde(default = "default_bin_us")]
        bin_us: u64,
        #[serde(default = "default_group")]
        group: u32,
        #[serde(default = "default_denoise")]
        denoise_window_us: Option<u64>,
        #[serde(default)]
        max_len: Option<u32>,
    },
    /// A ready timestep dataset; `gen` only validates it.
    Manifest { path: PathBuf },
}

fn default_train_fraction() -> f64 {
    0.8
}
fn default_shd_channels() -> u32 {
    700
}
fn default_bin_us() -> u64 {
    8_000
}
fn default_group() -> u32 {
    7
}
fn default_denoise() -> Option<u64> {
    Some(80_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKindName,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindName {
    Insertion,
    Deletion,
    Jitter,
}

impl From<NoiseKindName> for NoiseKind {
    fn from(k: NoiseKindName) -> Self {
        match k {
            NoiseKindName::Insertion => NoiseKind::Insertion,
            NoiseKindName::Deletion => NoiseKind::Deletion,
            NoiseKindName::Jitter => NoiseKind::Jitter,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub accept_window: u32,
    pub refractory: bool,
}

impl From<NetworkSection> for CoreConfig {
    fn from(n: NetworkSection) -> Self {
        CoreConfig {
            accept_window: n.accept_window,
            refractory: n.refractory,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSource {
    /// Search with the rewiring phase.
    #[default]
    Rewire,
    /// Draw units at random with the same distributions and keep them.
    Random,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionName {
    #[default]
    Threshold,
    ThresholdAndGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewiringSection {
    pub source: UnitSource,
    pub n_units: usize,
    pub batch_size: usize,
    pub r_pr: f64,
    /// Defaults to `-2 * batch_size`.
    pub theta_low: Option<f64>,
    /// Defaults to `2 * batch_size`.
    pub theta_high: Option<f64>,
    pub theta_s: f64,
    pub epsilon_s: f64,
    pub criterion: CriterionName,
    pub spine_min: usize,
    pub spine_max: usize,
    pub interval_upper_bound: u32,
    pub adaptive_interval_bound: bool,
    pub max_batches: usize,
    pub validation_per_class: usize,
}

impl Default for RewiringSection {
    fn default() -> Self {
        let d = RewiringConfig::default();
        Self {
            source: UnitSource::Rewire,
            n_units: 100,
            batch_size: d.batch_size,
            r_pr: d.r_pr,
            theta_low: None,
            theta_high: None,
            theta_s: d.theta_s,
            epsilon_s: d.epsilon_s,
            criterion: CriterionName::Threshold,
            spine_min: d.spine_min,
            spine_max: d.spine_max,
            interval_upper_bound: d.interval_upper_bound,
            adaptive_interval_bound: d.adaptive_interval_bound,
            max_batches: d.max_batches,
            validation_per_class: d.validation_per_class,
        }
    }
}

impl RewiringSection {
    pub fn to_core(&self, network: NetworkSection) -> RewiringConfig {
        let base = RewiringConfig::with_batch_size(self.batch_size);
        RewiringConfig {
            r_pr: self.r_pr,
            theta_low: self.theta_low.unwrap_or(base.theta_low),
            theta_high: self.theta_high.unwrap_or(base.theta_high),
            theta_s: self.theta_s,
            epsilon_s: self.epsilon_s,
            criterion: match self.criterion {
                CriterionName::Threshold => Criterion::ThresholdOnly,
                CriterionName::ThresholdAndGap => Criterion::ThresholdAndGap,
            },
            spine_min: self.spine_min,
            spine_max: self.spine_max,
            interval_upper_bound: self.interval_upper_bound,
            adaptive_interval_bound: self.adaptive_interval_bound,
            batch_size: self.batch_size,
            max_batches: self.max_batches,
            validation_per_class: self.validation_per_class,
            core: network.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    #[default]
    Zeros,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub init: WeightInit,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Remove each unit's mean weight across classes after training. The
    /// loss ignores it, so this only affects null detection.
    pub center: bool,
    pub prune_rate: f64,
    pub prune_step_fraction: f64,
    pub finetune_epochs_per_step: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            init: WeightInit::Zeros,
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            eps: d.eps,
            weight_decay: d.weight_decay,
            epochs: d.epochs,
            batch_size: d.batch_size,
            center: true,
            prune_rate: 0.5,
            prune_step_fraction: d.prune_step_fraction,
            finetune_epochs_per_step: d.finetune_epochs_per_step,
        }
    }
}

impl TrainSection {
    pub fn to_core(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            prune_step_fraction: self.prune_step_fraction,
            finetune_epochs_per_step: self.finetune_epochs_per_step,
            target_prune_rate: self.prune_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullSection {
    /// Per-class quantile of true-class train scores used as threshold.
    pub quantile: f64,
}

impl Default for NullSection {
    fn default() -> Self {
        Self { quantile: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// Write `t,u` spike traces for this many eval samples.
    pub trace_samples: usize,
    /// Repetitions of the eval split for the wall-clock measurement.
    pub repeats: usize,
}

impl RunConfig {
    /// Parses and validates a config; relative paths are resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_json_file(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        match &mut self.dataset {
            DatasetSpec::Smnist { images, labels, .. } => {
                fix(images);
                fix(labels);
            }
            DatasetSpec::Shd { manifest, .. } => fix(manifest),
            DatasetSpec::Manifest { path } => fix(path),
            DatasetSpec::Neuromorse { .. } => {}
        }
    }

    pub fn core(&self) -> CoreConfig {
        self.network.into()
    }

    pub fn rewiring_config(&self) -> RewiringConfig {
        self.rewiring.to_core(self.network)
    }

    pub fn validate(&self) -> Result<()> {
        self.rewiring_config().validate()?;
        if self.engine == Engine::Timewheel {
            if self.network.accept_window != 0 {
                return Err(Error::Config("the timewheel engine requires accept_window = 0".into()));
            }
            if self.rewiring.spine_max > MAX_SPINES {
                return Err(Error::Config(format!(
                    "the timewheel engine supports at most {MAX_SPINES} spines, spine_max is {}",
                    self.rewiring.spine_max
                )));
            }
        }
        let t = &self.train;
        if t.epochs > 0 && (t.batch_size == 0 || !(t.learning_rate >= 0.0)) {
            return Err(Error::Config("training needs a positive batch size and nonnegative learning rate".into()));
        }
        if !(0.0..1.0).contains(&t.prune_rate) || !(t.prune_step_fraction > 0.0 && t.prune_step_fraction <= 1.0) {
            return Err(Error::Config("prune_rate must lie in [0, 1) and prune_step_fraction in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.null.quantile) {
            return Err(Error::Config("null.quantile must lie in [0, 1]".into()));
        }
        match &self.dataset {
            DatasetSpec::Smnist { train_fraction, .. } if !(*train_fraction > 0.0 && *train_fraction <= 1.0) => {
                Err(Error::Config("train_fraction must lie in (0, 1]".into()))
            }
            DatasetSpec::Neuromorse {
                eval_noise: Some(n), ..
            } if !(n.level >= 0.0) => Err(Error::Config("noise level must be nonnegative".into())),
            _ => Ok(()),
        }
    }
}
