use std::path::Path;

use dendronn_core::readout::{
    memory_footprint, prune_iterative, train, CountSample, Footprint, Precision, Prediction, ReadoutModel,
};
use dendronn_core::rewiring::{redraw_unit, run_rewiring_phase};
use dendronn_core::sequence::input_connection_count;
use dendronn_core::FreezeStatus;
use serde::Serialize;
use serde_json::{json, Value};

use super::{infer_counts, labelled, load_manifest, record_metrics, require, stage_rng, RunPaths, Stage};
use crate::config::{RunConfig, UnitSource, WeightInit};
use crate::error::{Error, Result};
use crate::formats::checkpoint::{round_to_f32, Checkpoint};
use crate::formats::manifest::Split;
use crate::formats::network::NetworkFile;

/// Searches (or draws) the hidden layer and writes `network.dnnw`.
pub fn cmd_rewire(cfg: &RunConfig, paths: &RunPaths) -> Result<Value> {
    let data = load_manifest(cfg, paths)?;
    let train = data.load_split(Split::Train)?;
    let channels = data.manifest.channels;
    let n_classes = data.manifest.classes.len();
    let rcfg = cfg.rewiring_config();
    let mut rng = stage_rng(cfg.seed, Stage::Rewire);
    let (net, extra) = match cfg.rewiring.source {
        UnitSource::Random => {
            let units = (0..cfg.rewiring.n_units)
                .map(|_| redraw_unit(channels, &rcfg, &mut rng))
                .collect();
            let net = NetworkFile {
                channels,
                core: cfg.core(),
                units,
                classes: None,
            };
            (net, json!({ "source": "random" }))
        }
        UnitSource::Rewire => {
            let out = run_rewiring_phase(&train, n_classes, channels, cfg.rewiring.n_units, &rcfg, &mut rng)?;
            if out.exhausted {
                eprintln!(
                    "warning: rewiring budget exhausted with {} of {} units; classes without units: {:?}",
                    out.units.len(),
                    cfg.rewiring.n_units,
                    out.unfilled
                );
            }
            let extra = json!({
                "source": "rewire",
                "exhausted": out.exhausted,
                "unfilled_classes": out.unfilled,
                "batches": out.batches,
                "redraws": out.redraws,
            });
            let net = NetworkFile {
                channels,
                core: cfg.core(),
                units: out.units,
                classes: Some(out.classes),
            };
            (net, extra)
        }
    };
    if net.units.is_empty() {
        return Err(Error::Config("no units were found; loosen the rewiring settings".into()));
    }
    net.save(&paths.network())?;
    let spines = net.spine_counts();
    let mut m = json!({
        "target_units": cfg.rewiring.n_units,
        "units": net.units.len(),
        "mean_spines": spines.iter().sum::<usize>() as f64 / spines.len() as f64,
        "input_connections": input_connection_count(&net.units),
        "perm_frozen": net.units.iter().filter(|u| u.status == FreezeStatus::PermFrozen).count(),
    });
    merge(&mut m, extra);
    record_metrics(paths, "rewire", &m)?;
    Ok(m)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

struct Loaded {
    net: NetworkFile,
    classes: Vec<String>,
    train: Vec<CountSample>,
}

fn load_network_and_train_counts(cfg: &RunConfig, paths: &RunPaths) -> Result<Loaded> {
    require(&paths.network(), "rewire")?;
    let net = NetworkFile::load(&paths.network())?;
    let data = load_manifest(cfg, paths)?;
    let samples = data.load_split(Split::Train)?;
    let counts = infer_counts(cfg.engine, &net.units, net.channels, net.core, &samples)?;
    Ok(Loaded {
        net,
        classes: data.manifest.classes.clone(),
        train: labelled(&counts),
    })
}

fn accuracy(model: &ReadoutModel, samples: &[CountSample], precision: Precision) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for s in samples {
        hits += usize::from(model.predict(&s.counts, precision)? == s.label);
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Rounds to storage precision, then calibrates null thresholds on `samples`.
fn finalize(model: &ReadoutModel, samples: &[CountSample], quantile: f64, precision: Precision) -> Result<ReadoutModel> {
    let mut model = round_to_f32(model)?;
    model.calibrate_null_thresholds(samples, quantile, precision)?;
    Ok(model)
}

/// Trains the readout on the train split and writes `readout.dnro`.
pub fn cmd_train(cfg: &RunConfig, paths: &RunPaths) -> Result<Value> {
    let l = load_network_and_train_counts(cfg, paths)?;
    let mut rng = stage_rng(cfg.seed, Stage::Train);
    let (n_classes, n_units) = (l.classes.len(), l.net.units.len());
    let mut model = match cfg.train.init {
        WeightInit::Zeros => ReadoutModel::zeros(n_classes, n_units),
        WeightInit::Uniform => ReadoutModel::random(n_classes, n_units, &mut rng),
    };
    let history = train(&mut model, &l.train, &cfg.train.to_core(), &mut rng)?;
    if cfg.train.center {
        model.center_columns();
    }
    let model = finalize(&model, &l.train, cfg.null.quantile, Precision::Float)?;
    let m = json!({
        "epochs": history.epochs.len(),
        "final_loss": history.last().map(|e| e.loss),
        "train_accuracy": accuracy(&model, &l.train, Precision::Float)?,
        "null_thresholds_quantile": cfg.null.quantile,
    });
    Checkpoint {
        class_names: l.classes,
        model,
    }
    .save(&paths.readout())?;
    record_metrics(paths, "train", &m)?;
    Ok(m)
}

/// Iteratively prunes the trained readout to `train.prune_rate` and writes
/// `readout_pruned.dnro`.
pub fn cmd_prune(cfg: &RunConfig, paths: &RunPaths) -> Result<Value> {
    require(&paths.readout(), "train")?;
    let l = load_network_and_train_counts(cfg, paths)?;
    let ck = Checkpoint::load(&paths.readout())?;
    let mut model = ck.model;
    let before = accuracy(&model, &l.train, Precision::Float)?;
    let mut rng = stage_rng(cfg.seed, Stage::Prune);
    let report = prune_iterative(&mut model, &l.train, &cfg.train.to_core(), &mut rng)?;
    let model = finalize(&model, &l.train, cfg.null.quantile, Precision::Float)?;
    let m = json!({
        "target_prune_rate": cfg.train.prune_rate,
        "pruned_fraction": model.pruned_fraction(),
        "steps": report.steps,
        "train_accuracy_before": before,
        "train_accuracy_after": accuracy(&model, &l.train, Precision::Float)?,
    });
    Checkpoint {
        class_names: ck.class_names,
        model,
    }
    .save(&paths.pruned())?;
    record_metrics(paths, "prune", &m)?;
    Ok(m)
}

/// Adds the int8 twin to the pruned (or, failing that, trained) readout
/// and writes `readout_int8.dnro`.
pub fn cmd_quantize(cfg: &RunConfig, paths: &RunPaths) -> Result<Value> {
    let source = if paths.pruned().exists() { paths.pruned() } else { paths.readout() };
    require(&source, "train")?;
    let l = load_network_and_train_counts(cfg, paths)?;
    let ck = Checkpoint::load(&source)?;
    let mut model = ck.model;
    let scale = model.quantize_int8().scale;
    let model = finalize(&model, &l.train, cfg.null.quantile, Precision::Int8)?;
    let m = json!({
        "source": file_name(&source),
        "scale": scale,
        "train_accuracy_float": accuracy(&model, &l.train, Precision::Float)?,
        "train_accuracy_int8": accuracy(&model, &l.train, Precision::Int8)?,
    });
    Checkpoint {
        class_names: ck.class_names,
        model,
    }
    .save(&paths.quantized())?;
    record_metrics(paths, "quantize", &m)?;
    Ok(m)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Null-detection outcome counts over the eval split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NullConfusion {
    pub class_correct: usize,
    pub class_wrong: usize,
    pub class_as_null: usize,
    pub null_as_null: usize,
    pub null_as_class: usize,
}

impl NullConfusion {
    pub fn class_samples(&self) -> usize {
        self.class_correct + self.class_wrong + self.class_as_null
    }

    pub fn null_samples(&self) -> usize {
        self.null_as_null + self.null_as_class
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootprintBits {
    pub input_connections: f64,
    pub output_weights: f64,
    pub intervals: f64,
    pub unit_state: f64,
    pub integrator_state: f64,
    pub total: f64,
}

impl From<Footprint> for FootprintBits {
    fn from(f: Footprint) -> Self {
        Self {
            input_connections: f.input_connections,
            output_weights: f.output_weights,
            intervals: f.intervals,
            unit_state: f.unit_state,
            integrator_state: f.integrator_state,
            total: f.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub checkpoint: String,
    pub precision: &'static str,
    pub samples: usize,
    /// Argmax accuracy over labelled eval samples.
    pub accuracy: f64,
    /// Present when the checkpoint carries null thresholds.
    pub null_confusion: Option<NullConfusion>,
    /// Labelled samples predicted as their class, with null detection on.
    pub class_accuracy_with_null: Option<f64>,
    /// Null samples flagged as null.
    pub null_detection_rate: Option<f64>,
    /// Correct outcomes (class or null) over all samples.
    pub mixed_accuracy: Option<f64>,
    pub prune_rate: f64,
    pub quant_scale: Option<f64>,
    pub footprint_bits: FootprintBits,
    /// Per-sample predictions: class index, or -1 for null.
    pub predictions: Vec<i64>,
}

/// Evaluates a checkpoint (the most processed one by default) on the eval
/// split.
pub fn cmd_eval(cfg: &RunConfig, paths: &RunPaths, checkpoint: Option<&Path>) -> Result<EvalReport> {
    let ck_path = match checkpoint {
        Some(p) => p.to_path_buf(),
        None => paths.latest_checkpoint()?,
    };
    require(&ck_path, "train")?;
    require(&paths.network(), "rewire")?;
    let ck = Checkpoint::load(&ck_path)?;
    let net = NetworkFile::load(&paths.network())?;
    let data = load_manifest(cfg, paths)?;
    let samples = data.load_split(Split::Eval)?;
    let counts = infer_counts(cfg.engine, &net.units, net.channels, net.core, &samples)?;
    let model = &ck.model;
    if model.n_units() != net.units.len() || model.n_classes() != data.manifest.classes.len() {
        return Err(Error::format("checkpoint", "shape does not match the network and dataset"));
    }
    let precision = if model.quantized().is_some() { Precision::Int8 } else { Precision::Float };

    let mut hits = 0;
    let mut labelled_n = 0;
    let mut confusion = NullConfusion::default();
    let mut predictions = Vec::with_capacity(counts.len());
    for (c, label) in &counts {
        let with_null = match model.null_thresholds() {
            Some(_) => Some(model.predict_with_null(c, precision)?),
            None => None,
        };
        if let Some(label) = label {
            labelled_n += 1;
            hits += usize::from(model.predict(c, precision)? == *label);
        }
        match (with_null, label) {
            (Some(Prediction::Class(p)), Some(l)) if p == *l => confusion.class_correct += 1,
            (Some(Prediction::Class(_)), Some(_)) => confusion.class_wrong += 1,
            (Some(Prediction::Null), Some(_)) => confusion.class_as_null += 1,
            (Some(Prediction::Null), None) => confusion.null_as_null += 1,
            (Some(Prediction::Class(_)), None) => confusion.null_as_class += 1,
            (None, _) => {}
        }
        predictions.push(match with_null {
            Some(Prediction::Class(p)) => p as i64,
            Some(Prediction::Null) => -1,
            None => model.predict(c, precision)? as i64,
        });
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    let has_null = model.null_thresholds().is_some();
    let len = samples.iter().map(|s| s.stream.len()).max().unwrap_or(0);
    let bits = if precision == Precision::Int8 { 8 } else { 32 };
    let footprint = memory_footprint(&net.spine_counts(), model.n_classes(), model.pruned_fraction(), bits, len as u64)?;
    let report = EvalReport {
        checkpoint: file_name(&ck_path),
        precision: if precision == Precision::Int8 { "int8" } else { "float32" },
        samples: counts.len(),
        accuracy: ratio(hits, labelled_n).unwrap_or(0.0),
        null_confusion: has_null.then_some(confusion),
        class_accuracy_with_null: if has_null { ratio(confusion.class_correct, confusion.class_samples()) } else { None },
        null_detection_rate: if has_null { ratio(confusion.null_as_null, confusion.null_samples()) } else { None },
        mixed_accuracy: if has_null {
            ratio(confusion.class_correct + confusion.null_as_null, counts.len())
        } else {
            None
        },
        prune_rate: model.pruned_fraction(),
        quant_scale: model.quantized().map(|q| q.scale),
        footprint_bits: footprint.into(),
        predictions,
    };
    record_metrics(paths, "eval", &serde_json::to_value(&report)?)?;
    Ok(report)
}
