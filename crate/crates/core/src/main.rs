use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use distsum::graph::{generate, mixing_profile, GraphSpec};
use distsum::harness::{run_experiment, run_sweep, write_csv, write_jsonl, ExperimentConfig, SweepConfig, TrialRecord};
use distsum::oracles::exact_stats;
use distsum::values::ValueAssignment;
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "distsum", version, about = "Distributed data-summarization simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// CSV output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full records as JSON lines.
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Run a grid of experiments.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Print τ_G and τ_G(λ) of a graph.
    MixingTime {
        /// `family:args`, e.g. `clique:16` or `random-regular:64:4:1`.
        #[arg(long)]
        graph: String,
        /// Thresholds λ; defaults to 1/n³.
        #[arg(long)]
        lambda: Vec<f64>,
    },
    /// Print exact statistics of an instance file as JSON.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        universe: Option<u64>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Highest moment reported (F₀ through F_max).
        #[arg(long, default_value_t = 4)]
        moments: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit(records: &[TrialRecord], out: Option<&Path>, jsonl: Option<&Path>) -> Result<()> {
    write_csv(sink(out)?, records)?;
    if let Some(p) = jsonl {
        let mut w = sink(Some(p))?;
        write_jsonl(&mut w, records)?;
        w.flush()?;
    }
    let failed = records.iter().filter(|r| !r.succeeded()).count();
    log::info!("{} trials, {failed} failed", records.len());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().cmd {
        Command::Run { config, out, jsonl } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let records = run_experiment(&cfg)?;
            emit(&records, out.as_deref(), jsonl.as_deref())?;
        }
        Command::Sweep { config, out, jsonl } => {
            let sweep = SweepConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let records: Vec<TrialRecord> = run_sweep(&sweep)?.into_iter().flat_map(|(_, r)| r).collect();
            emit(&records, out.as_deref(), jsonl.as_deref())?;
        }
        Command::MixingTime { graph, lambda } => {
            let spec: GraphSpec = graph.parse()?;
            let g = generate(&spec)?;
            let lambdas = if lambda.is_empty() { vec![(g.n() as f64).powi(-3)] } else { lambda };
            let prof = mixing_profile(&g, &lambdas)?;
            let at: Vec<_> = prof.tau_at.iter().map(|&(l, t)| json!({"lambda": l, "tau": t})).collect();
            println!("{}", json!({"graph": graph, "n": g.n(), "m": g.m(), "tau": prof.tau_exact, "tau_lambda": at}));
        }
        Command::Oracle { instance, n, universe, top, moments, out } => {
            let text = std::fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let vals = ValueAssignment::parse_instance(&text, n, universe)?;
            let ps: Vec<u32> = (0..=moments).collect();
            let mut w = sink(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &exact_stats(&vals, &ps, top).to_json())?;
            writeln!(w)?;
        }
    }
    Ok(())
}
