//! The command pipeline. Every command reads its inputs from and writes its
//! artifacts to the run directory, and merges a section into
//! `metrics.json`. Everything except bench timings is a pure function of
//! the config, so reruns produce identical bytes.

mod bench;
mod gen;
mod model;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dendronn_core::data::LabeledSample;
use dendronn_core::readout::CountSample;
use dendronn_core::SequenceSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub use bench::{cmd_bench, BenchReport, SampleWork};
pub use gen::cmd_gen;
pub use model::{cmd_eval, cmd_prune, cmd_quantize, cmd_rewire, cmd_train, EvalReport, NullConfusion};

use crate::config::{DatasetSpec, RunConfig};
use crate::engine::{Engine, Runner};
use crate::error::{Error, Result};
use crate::formats::manifest::{LoadedManifest, Manifest};
use crate::formats::{read_json_file, write_json_file};

/// Artifact locations inside a run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub out: PathBuf,
}

impl RunPaths {
    pub fn new(out: &Path) -> Self {
        Self { out: out.to_path_buf() }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.out.join("dataset")
    }

    pub fn network(&self) -> PathBuf {
        self.out.join("network.dnnw")
    }

    pub fn readout(&self) -> PathBuf {
        self.out.join("readout.dnro")
    }

    pub fn pruned(&self) -> PathBuf {
        self.out.join("readout_pruned.dnro")
    }

    pub fn quantized(&self) -> PathBuf {
        self.out.join("readout_int8.dnro")
    }

    pub fn metrics(&self) -> PathBuf {
        self.out.join("metrics.json")
    }

    pub fn bench(&self) -> PathBuf {
        self.out.join("bench.json")
    }

    pub fn bench_counters(&self) -> PathBuf {
        self.out.join("bench_counters.txt")
    }

    pub fn trace_dir(&self) -> PathBuf {
        self.out.join("trace")
    }

    /// Manifest of the timestep dataset the model commands consume.
    pub fn manifest(&self, cfg: &RunConfig) -> PathBuf {
        match &cfg.dataset {
            DatasetSpec::Manifest { path } => path.clone(),
            _ => self.dataset_dir().join("manifest.json"),
        }
    }

    /// Most processed readout checkpoint present.
    pub fn latest_checkpoint(&self) -> Result<PathBuf> {
        [self.quantized(), self.pruned(), self.readout()]
            .into_iter()
            .find(|p| p.exists())
            .ok_or_else(|| Error::MissingArtifact {
                path: self.readout(),
                command: "train",
            })
    }
}

/// Pipeline stages, each with its own random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Gen = 1,
    Rewire = 2,
    Train = 3,
    Prune = 4,
}

pub fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

pub(crate) fn require(path: &Path, command: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            command,
        })
    }
}

pub(crate) fn load_manifest(cfg: &RunConfig, paths: &RunPaths) -> Result<LoadedManifest> {
    let path = paths.manifest(cfg);
    require(&path, "gen")?;
    Manifest::load(&path)
}

/// Replaces one top-level section of `metrics.json`.
pub fn record_metrics(paths: &RunPaths, section: &str, value: &Value) -> Result<()> {
    let path = paths.metrics();
    let mut all: BTreeMap<String, Value> = if path.exists() {
        read_json_file(&path)?
    } else {
        BTreeMap::new()
    };
    all.insert(section.to_string(), value.clone());
    write_json_file(&path, &all)
}

/// Hidden spike counts for every sample; labels stay optional.
pub fn infer_counts(
    engine: Engine,
    units: &[SequenceSpec],
    channels: u32,
    core: dendronn_core::CoreConfig,
    samples: &[LabeledSample],
) -> Result<Vec<(Vec<u32>, Option<usize>)>> {
    let mut runner = Runner::new(engine, units, channels, core)?;
    samples
        .iter()
        .map(|s| Ok((runner.infer(&s.stream)?.counts(), s.label)))
        .collect()
}

/// Drops unlabelled samples.
pub(crate) fn labelled(counts: &[(Vec<u32>, Option<usize>)]) -> Vec<CountSample> {
    counts
        .iter()
        .filter_map(|(c, l)| l.map(|label| CountSample { counts: c.clone(), label }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Rewire,
    Train,
    Prune,
    Quantize,
    Eval,
    Bench,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Gen,
        Command::Rewire,
        Command::Train,
        Command::Prune,
        Command::Quantize,
        Command::Eval,
        Command::Bench,
    ];
}

/// Runs one command and returns the metrics section it produced.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Value> {
    let paths = RunPaths::new(&cfg.out);
    match cmd {
        Command::Gen => cmd_gen(cfg, &paths),
        Command::Rewire => cmd_rewire(cfg, &paths),
        Command::Train => cmd_train(cfg, &paths),
        Command::Prune => cmd_prune(cfg, &paths),
        Command::Quantize => cmd_quantize(cfg, &paths),
        Command::Eval => cmd_eval(cfg, &paths, None).map(|r| serde_json::to_value(r).expect("report serializes")),
        Command::Bench => cmd_bench(cfg, &paths).map(|r| serde_json::to_value(r.summary()).expect("report serializes")),
    }
}
