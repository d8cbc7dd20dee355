use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use i2r_core::cli::{self, ExperimentConfig};
use i2r_core::format::sig9;
use i2r_core::routing;
use i2r_core::{MetricKind, Result};

#[derive(Parser)]
#[command(name = "i2r", version, about = "Interference-aware route planning for UAV multi-hop networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Use only this metric.
    #[arg(long)]
    metric: Option<MetricKind>,
    /// Use only this alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Use only this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (metric, alpha, seed) combination and write the result tree.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print (or write) the mobility trace of the first seed.
    GenerateTrace {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the topology snapshot and forwarding table at one instant.
    DumpTopology {
        config: PathBuf,
        #[arg(long)]
        at: f64,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let mut config = cli::load_config(path)?;
    if let Some(m) = o.metric {
        config.metrics = vec![m];
    }
    if let Some(a) = o.alpha {
        i2r_core::metrics::check_alpha(a)?;
        config.alphas = vec![a];
    }
    if let Some(s) = o.seed {
        config.seeds = vec![s];
    }
    Ok(config)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, overrides } => {
            let config = load(&config, &overrides)?;
            let rows = cli::run(&config)?;
            print!("{}", cli::comparison_csv(&rows));
            eprintln!("results written to {}", config.output_dir.display());
        }
        Command::GenerateTrace { config, overrides, out } => {
            let config = load(&config, &overrides)?;
            let trace = config.trace(config.seeds[0])?;
            match out {
                Some(path) => fs::write(path, trace.to_text())?,
                None => print!("{}", trace.to_text()),
            }
        }
        Command::DumpTopology { config, at, overrides } => {
            let config = load(&config, &overrides)?;
            let trace = config.trace(config.seeds[0])?;
            let plan_config = config.plan_config(config.metrics[0], config.alphas[0], trace.node_count())?;
            let plan = routing::plan_instant(&trace, &plan_config, at)?;
            print!("{}", plan.assignment.snapshot.dump());
            println!("table {} alpha {} t {}", plan_config.metric, plan_config.alpha, sig9(at));
            for (u, hop) in plan.assignment.table.next_hop.iter().enumerate() {
                println!("{u} -> {hop}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
