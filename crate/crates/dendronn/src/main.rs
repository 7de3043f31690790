use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dendronn::config::RunConfig;
use dendronn::core::hwnorm::{normalize_metrics, HardwareMetrics};
use dendronn::engine::Engine;
use dendronn::formats::dnev::{load_stream, read_csv, save_stream, write_csv};
use dendronn::pipeline::{cmd_eval, run_command, Command, RunPaths};
use serde_json::{json, Value};

/// Dendritic sequence-detection networks: datasets, rewiring, readout
/// training, compression, evaluation and engine benchmarks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config engine.
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the dataset as event files plus a manifest.
    Gen(RunArgs),
    /// Search the hidden layer with the rewiring phase.
    Rewire(RunArgs),
    /// Train the readout.
    Train(RunArgs),
    /// Iteratively prune the trained readout.
    Prune(RunArgs),
    /// Add an int8 twin to the readout.
    Quantize(RunArgs),
    /// Evaluate a checkpoint on the eval split.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint to evaluate; defaults to the most processed one.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Benchmark the time-wheel engine on the eval split.
    Bench(RunArgs),
    /// Run every step from gen to bench.
    Run(RunArgs),
    /// Scale energy and area to a reference node and supply voltage.
    Normalize {
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        area: f64,
        /// Technology node in nm.
        #[arg(long)]
        node: f64,
        /// Supply voltage in V.
        #[arg(long)]
        voltage: f64,
        #[arg(long)]
        node_ref: f64,
        #[arg(long)]
        voltage_ref: f64,
    },
    /// Convert an event file between binary DNEV and CSV (by extension).
    Convert { input: PathBuf, output: PathBuf },
}

fn load_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(engine) = args.engine {
        cfg.engine = engine;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(value: &Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn is_csv(p: &std::path::Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let single = |args: &RunArgs, cmd: Command| -> anyhow::Result<()> { print(&run_command(cmd, &load_config(args)?)?) };
    match cli.command {
        Cmd::Gen(a) => single(&a, Command::Gen),
        Cmd::Rewire(a) => single(&a, Command::Rewire),
        Cmd::Train(a) => single(&a, Command::Train),
        Cmd::Prune(a) => single(&a, Command::Prune),
        Cmd::Quantize(a) => single(&a, Command::Quantize),
        Cmd::Bench(a) => single(&a, Command::Bench),
        Cmd::Eval { run, checkpoint } => {
            let cfg = load_config(&run)?;
            let report = cmd_eval(&cfg, &RunPaths::new(&cfg.out), checkpoint.as_deref())?;
            let mut v = serde_json::to_value(report)?;
            if let Value::Object(m) = &mut v {
                m.remove("predictions");
            }
            print(&v)
        }
        Cmd::Run(a) => {
            let cfg = load_config(&a)?;
            let mut all = serde_json::Map::new();
            for cmd in Command::ALL {
                let name = format!("{cmd:?}").to_lowercase();
                eprintln!("== {name}");
                let mut v = run_command(cmd, &cfg).with_context(|| format!("{name} failed"))?;
                if let Value::Object(m) = &mut v {
                    m.remove("predictions");
                }
                all.insert(name, v);
            }
            print(&Value::Object(all))
        }
        Cmd::Normalize {
            energy,
            area,
            node,
            voltage,
            node_ref,
            voltage_ref,
        } => {
            let orig = HardwareMetrics {
                energy,
                area,
                node,
                voltage,
            };
            let n = normalize_metrics(&orig, node_ref, voltage_ref)?;
            print(&json!({ "energy": n.energy, "area": n.area }))
        }
        Cmd::Convert { input, output } => {
            let stream = if is_csv(&input) {
                let f = File::open(&input).with_context(|| input.display().to_string())?;
                read_csv(BufReader::new(f))?
            } else {
                load_stream(&input)?
            };
            if is_csv(&output) {
                let f = File::create(&output).with_context(|| output.display().to_string())?;
                let mut w = BufWriter::new(f);
                write_csv(&mut w, &stream)?;
                w.flush()?;
            } else if is_csv(&input) {
                save_stream(&output, &stream)?;
            } else {
                bail!("one of the two paths must end in .csv");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

