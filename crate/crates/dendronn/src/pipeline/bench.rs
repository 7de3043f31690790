use std::io::Write;
use std::time::Instant;

use dendronn_core::timewheel::{WheelCounters, WheelEngine};
use dendronn_core::unit::network_infer;
use serde::Serialize;

use super::{load_manifest, require, RunPaths};
use crate::config::RunConfig;
use crate::error::{Error, PathContext, Result};
use crate::formats::create;
use crate::formats::manifest::Split;
use crate::formats::network::NetworkFile;
use crate::formats::write_json_file;

/// Wheel work for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleWork {
    pub timesteps: u64,
    pub events: u64,
    pub targets: u64,
    pub due_checks: u64,
    pub schedules: u64,
    pub plane_clears: u64,
}

impl SampleWork {
    fn from_counters(c: &WheelCounters) -> Self {
        Self {
            timesteps: c.ticks,
            events: c.events_routed,
            targets: c.targets_routed,
            due_checks: c.due_checks,
            schedules: c.schedules,
            plane_clears: c.plane_clears,
        }
    }

    pub fn work(&self) -> u64 {
        self.due_checks + self.schedules
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub samples: usize,
    pub repeats: usize,
    pub totals: SampleWork,
    /// Pooled `(due checks + schedules) / routed targets`.
    pub work_per_target: Option<f64>,
    /// Largest relative deviation of a sample's ratio from the pooled one,
    /// over samples with at least one routed target.
    pub max_ratio_deviation: Option<f64>,
    pub wheel_seconds: f64,
    pub wheel_timesteps_per_second: f64,
    pub wheel_events_per_second: f64,
    pub reference_seconds: f64,
    pub reference_timesteps_per_second: f64,
    pub seconds_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    #[serde(flatten)]
    pub summary: BenchSummary,
    pub per_sample: Vec<SampleWork>,
}

impl BenchReport {
    pub fn summary(&self) -> &BenchSummary {
        &self.summary
    }
}

fn rate(n: u64, secs: f64) -> f64 {
    if secs > 0.0 {
        n as f64 / secs
    } else {
        0.0
    }
}

/// Runs the eval split through the time wheel, recording per-sample work
/// and wall-clock throughput next to the reference engine. Writes
/// `bench.json`, `bench_counters.txt` and optional `trace/*.csv`.
pub fn cmd_bench(cfg: &RunConfig, paths: &RunPaths) -> Result<BenchReport> {
    require(&paths.network(), "rewire")?;
    let net = NetworkFile::load(&paths.network())?;
    if net.core.accept_window != 0 {
        return Err(Error::Config("bench runs the time wheel, which requires accept_window = 0".into()));
    }
    let data = load_manifest(cfg, paths)?;
    let samples = data.load_split(Split::Eval)?;
    let mut engine = WheelEngine::new(&net.units, net.channels, net.core.refractory)?;

    let mut per_sample = Vec::with_capacity(samples.len());
    let mut totals = WheelCounters::default();
    for (i, s) in samples.iter().enumerate() {
        let raster = engine.infer(&s.stream)?;
        let c = engine.take_counters();
        totals.merge(&c);
        per_sample.push(SampleWork::from_counters(&c));
        if i < cfg.bench.trace_samples {
            let path = paths.trace_dir().join(format!("{i:05}.csv"));
            let mut w = create(&path)?;
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(["t", "u"])?;
            for t in 0..raster.len() {
                for u in 0..raster.n_units() {
                    if raster.get(t, u) {
                        csv.serialize((t, u))?;
                    }
                }
            }
            csv.flush().at(&path)?;
            drop(csv);
            w.flush().at(&path)?;
        }
    }

    let repeats = cfg.bench.repeats.max(1);
    let start = Instant::now();
    for _ in 0..repeats {
        for s in &samples {
            engine.infer(&s.stream)?;
        }
    }
    let wheel_seconds = start.elapsed().as_secs_f64();
    engine.take_counters();
    let start = Instant::now();
    for _ in 0..repeats {
        for s in &samples {
            network_infer(&net.units, &s.stream, &net.core)?;
        }
    }
    let reference_seconds = start.elapsed().as_secs_f64();

    let totals_work = SampleWork::from_counters(&totals);
    let pooled = (totals_work.targets > 0).then(|| totals_work.work() as f64 / totals_work.targets as f64);
    let max_dev = pooled.and_then(|p| {
        per_sample
            .iter()
            .filter(|w| w.targets > 0)
            .map(|w| (w.work() as f64 / w.targets as f64 / p - 1.0).abs())
            .reduce(f64::max)
    });
    let steps = totals.ticks * repeats as u64;
    let summary = BenchSummary {
        samples: samples.len(),
        repeats,
        totals: totals_work,
        work_per_target: pooled,
        max_ratio_deviation: max_dev,
        wheel_seconds,
        wheel_timesteps_per_second: rate(steps, wheel_seconds),
        wheel_events_per_second: rate(totals.events_routed * repeats as u64, wheel_seconds),
        reference_seconds,
        reference_timesteps_per_second: rate(steps, reference_seconds),
        seconds_per_sample: if samples.is_empty() { 0.0 } else { wheel_seconds / (samples.len() * repeats) as f64 },
    };
    let report = BenchReport { summary, per_sample };
    write_json_file(&paths.bench(), &report)?;
    let counters_path = paths.bench_counters();
    let mut w = create(&counters_path)?;
    writeln!(w, "{totals}").at(&counters_path)?;
    w.flush().at(&counters_path)?;
    Ok(report)
}
