use std::path::Path;

use dendronn_core::data::{
    add_noise, build_neuromorse, build_smnist, shd_preprocess, shd_slice_borders, slice, upsample_nearest, FrameTensor,
    LabeledSample, ShdConfig, IMAGE_SIDE, NULL_WORDS, SMNIST_LEN, TRAIN_WORDS,
};
use dendronn_core::EventStream;
use rand::seq::SliceRandom;
use serde_json::{json, Value};

use super::{record_metrics, stage_rng, RunPaths, Stage};
use crate::config::{DatasetSpec, RunConfig};
use crate::error::{Error, Result};
use crate::formats::dnev::save_stream;
use crate::formats::idx::{load_images, load_labels};
use crate::formats::manifest::{BordersRecord, Entry, Manifest, Split, TimeUnitName};

/// Builds the configured dataset as timestep DNEV files plus a manifest.
pub fn cmd_gen(cfg: &RunConfig, paths: &RunPaths) -> Result<Value> {
    let mut rng = stage_rng(cfg.seed, Stage::Gen);
    let built = match &cfg.dataset {
        DatasetSpec::Neuromorse {
            train_words,
            null_words,
            eval_noise,
        } => {
            let own = |w: &Option<Vec<String>>, d: &[&'static str]| -> Vec<String> {
                w.clone().unwrap_or_else(|| d.iter().map(|s| s.to_string()).collect())
            };
            let train_words = own(train_words, &TRAIN_WORDS);
            let null_words = own(null_words, &NULL_WORDS);
            let train_refs: Vec<&str> = train_words.iter().map(String::as_str).collect();
            let null_refs: Vec<&str> = null_words.iter().map(String::as_str).collect();
            let nm = build_neuromorse(&train_refs, &null_refs, cfg.rewiring.batch_size)?;
            let mut eval = nm.eval;
            if let Some(noise) = eval_noise {
                for s in &mut eval {
                    s.stream = add_noise(&s.stream, noise.kind.into(), noise.level, &mut rng);
                }
            }
            Built {
                name: "neuromorse",
                classes: nm.classes,
                train: nm.train,
                eval,
                borders: None,
            }
        }
        DatasetSpec::Smnist {
            images,
            labels,
            limit,
            permuted,
            train_fraction,
        } => smnist(images, labels, *limit, *permuted, *train_fraction, &mut rng)?,
        DatasetSpec::Shd {
            manifest,
            in_channels,
            bin_us,
            group,
            denoise_window_us,
            max_len,
        } => {
            let shd = ShdConfig {
                in_channels: *in_channels,
                bin_us: *bin_us,
                group: *group,
                denoise_window_us: *denoise_window_us,
                max_len: *max_len,
            };
            shd_dataset(manifest, &shd)?
        }
        DatasetSpec::Manifest { path } => {
            let loaded = Manifest::load(path)?;
            let train = loaded.load_split(Split::Train)?;
            let eval = loaded.load_split(Split::Eval)?;
            let m = json!({
                "source": path,
                "train_samples": train.len(),
                "eval_samples": eval.len(),
                "classes": loaded.manifest.classes.len(),
            });
            record_metrics(paths, "gen", &m)?;
            return Ok(m);
        }
    };
    built.write(paths)
}

struct Built {
    name: &'static str,
    classes: Vec<String>,
    train: Vec<LabeledSample>,
    eval: Vec<LabeledSample>,
    borders: Option<BordersRecord>,
}

impl Built {
    fn write(self, paths: &RunPaths) -> Result<Value> {
        let dir = paths.dataset_dir();
        let first = self.train.first().or(self.eval.first()).ok_or(dendronn_core::Error::EmptyDataset)?;
        let channels = first.stream.channels();
        let len = first.stream.len();
        let uniform = self
            .train
            .iter()
            .chain(&self.eval)
            .all(|s| s.stream.len() == len && s.stream.channels() == channels);
        if !uniform {
            return Err(Error::format("dataset", "samples differ in shape"));
        }
        let mut samples = Vec::new();
        for (split, name, set) in [(Split::Train, "train", &self.train), (Split::Eval, "eval", &self.eval)] {
            for (i, s) in set.iter().enumerate() {
                let rel = format!("{name}/{i:05}.dnev");
                save_stream(&dir.join(&rel), &s.stream)?;
                samples.push(Entry {
                    path: rel,
                    label: s.label,
                    split,
                });
            }
        }
        let manifest = Manifest {
            name: self.name.to_string(),
            time_unit: TimeUnitName::Steps,
            channels,
            len: Some(len),
            classes: self.classes,
            slice_borders: self.borders,
            samples,
        };
        manifest.save(&dir.join("manifest.json"))?;
        let events = |set: &[LabeledSample]| set.iter().map(|s| s.stream.n_events()).sum::<usize>();
        let m = json!({
            "dataset": self.name,
            "classes": manifest.classes.len(),
            "channels": channels,
            "len": len,
            "train_samples": self.train.len(),
            "eval_samples": self.eval.len(),
            "eval_null_samples": self.eval.iter().filter(|s| s.label.is_none()).count(),
            "train_events": events(&self.train),
            "eval_events": events(&self.eval),
        });
        record_metrics(paths, "gen", &m)?;
        Ok(m)
    }
}

fn smnist(
    images: &Path,
    labels: &Path,
    limit: Option<usize>,
    permuted: bool,
    train_fraction: f64,
    rng: &mut impl rand::Rng,
) -> Result<Built> {
    let imgs = load_images(images)?;
    let labs = load_labels(labels)?;
    if imgs.images.len() != labs.len() {
        return Err(Error::format("idx file", "image and label counts differ"));
    }
    let n = limit.unwrap_or(labs.len()).min(labs.len());
    let square: Vec<Vec<u8>> = imgs.images[..n]
        .iter()
        .map(|img| {
            if imgs.rows == IMAGE_SIDE && imgs.cols == IMAGE_SIDE {
                img.clone()
            } else {
                upsample_nearest(img, imgs.cols, imgs.rows, IMAGE_SIDE, IMAGE_SIDE)
            }
        })
        .collect();
    let labels: Vec<usize> = labs[..n].iter().map(|&l| l as usize).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let perm = permuted.then(|| {
        let mut p: Vec<u32> = (0..SMNIST_LEN).collect();
        p.shuffle(rng);
        p
    });
    let refs: Vec<&[u8]> = square.iter().map(Vec::as_slice).collect();
    let samples = build_smnist(&refs, &labels, perm.as_deref())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_train = ((train_fraction * n as f64).round() as usize).min(n);
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    Ok(Built {
        name: if permuted { "p-smnist" } else { "smnist" },
        classes: (0..n_classes).map(|c| c.to_string()).collect(),
        train: pick(&order[..n_train]),
        eval: pick(&order[n_train..]),
        borders: None,
    })
}

fn shd_dataset(manifest: &Path, shd: &ShdConfig) -> Result<Built> {
    let raw = Manifest::load(manifest)?;
    if raw.manifest.time_unit != TimeUnitName::Microseconds || raw.manifest.channels != shd.in_channels {
        return Err(Error::Config(format!(
            "{} must list microsecond recordings with {} channels",
            manifest.display(),
            shd.in_channels
        )));
    }
    let frames = |split| -> Result<Vec<(FrameTensor, Option<usize>)>> {
        raw.load_raw_split(split)?
            .into_iter()
            .map(|(f, label)| Ok((shd_preprocess(&f.raw_events(), shd)?, label)))
            .collect()
    };
    let train = frames(Split::Train)?;
    let eval = frames(Split::Eval)?;
    let len = shd
        .max_len
        .unwrap_or_else(|| train.iter().chain(&eval).map(|(f, _)| f.len()).max().unwrap_or(0));
    let values: Vec<u32> = train
        .iter()
        .flat_map(|(f, _)| f.distinct_values())
        .filter(|&v| v > 0)
        .collect();
    if values.is_empty() {
        return Err(Error::format("dataset", "train recordings contain no events"));
    }
    let borders = shd_slice_borders(&values);
    let to_samples = |set: Vec<(FrameTensor, Option<usize>)>| -> Vec<LabeledSample> {
        set.into_iter()
            .map(|(f, label)| {
                let stream: EventStream = slice(&f.resized(len), &borders);
                LabeledSample::new(stream, label)
            })
            .collect()
    };
    Ok(Built {
        name: "shd",
        classes: raw.manifest.classes.clone(),
        train: to_samples(train),
        eval: to_samples(eval),
        borders: Some((&borders).into()),
    })
}
