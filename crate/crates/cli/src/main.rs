//! Command-line front end: generate a synthetic dataset, train the
//! classifier, explain the test split, evaluate the explanations, and emit
//! consolidated reports. Every stage is driven by one JSON config file plus
//! a handful of override flags; flags win over the file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use infoflow::pipeline::{
    cmd_evaluate, cmd_explain, cmd_generate, cmd_report, cmd_train, parse_sparsity_range,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "infoflow",
    about = "Synthetic-benchmark toolkit for explaining graph classifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the run seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count from the config file.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic planted-motif dataset.
    Generate(CommonArgs),
    /// Train the graph classifier on the generated dataset.
    Train(CommonArgs),
    /// Explain every test-split graph with the configured explainers.
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of explainers to run
        /// (ifx,mi,cf,gradient,random).
        #[arg(long, value_name = "NAMES")]
        explainers: Option<String>,
    },
    /// Compute fidelity, separability, and motif-recovery reports.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Sparsity levels as start:end:step (e.g. 0.01:0.10:0.01) or a
        /// single value.
        #[arg(long, value_name = "RANGE")]
        sparsity: Option<String>,
    },
    /// Consolidate evaluation output into a summary table and plot CSVs.
    Report(CommonArgs),
}

fn load_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)
        .with_context(|| format!("loading config {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(workers) = common.workers {
        config.worker_count = workers;
    }
    config.validate()?;
    Ok(config)
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Generate(common) => {
            let config = load_config(common)?;
            cmd_generate(&config)?;
            println!("wrote {}", config.paths.dataset.display());
        }
        Command::Train(common) => {
            let config = load_config(common)?;
            cmd_train(&config)?;
            println!("wrote {}", config.paths.model.display());
        }
        Command::Explain { common, explainers } => {
            let mut config = load_config(common)?;
            if let Some(names) = explainers {
                config.explainer.explainers =
                    names.split(',').map(|s| s.trim().to_string()).collect();
                config.validate()?;
            }
            cmd_explain(&config)?;
            println!("wrote {}", config.paths.explanations_dir.display());
        }
        Command::Evaluate { common, sparsity } => {
            let mut config = load_config(common)?;
            if let Some(range) = sparsity {
                config.metrics.sparsity_set = parse_sparsity_range(range)?;
            }
            cmd_evaluate(&config)?;
            println!("wrote {}", config.paths.reports_dir.display());
        }
        Command::Report(common) => {
            let config = load_config(common)?;
            cmd_report(&config)?;
            println!(
                "wrote {}",
                config.paths.reports_dir.join("summary.txt").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
