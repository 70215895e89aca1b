//! Command-line entry point.
//!
//! Runs are driven by a TOML config file; every flag overrides the matching
//! config key (flag > config > default). Logging goes to stderr; stdout
//! carries one machine-readable JSON summary per run.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tsmb::config::{Overrides, RunConfig};
use tsmb::runner::{cmd_inject, cmd_run, cmd_sweep_b, summary_json};

#[derive(Parser)]
#[command(name = "tsmb", version, about = "Time-series modeling under uncertain delays")]
struct Cli {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override method: tsmb | tdb | perturbed | tde-point | no-alignment | real-delay.
    #[arg(long)]
    method: Option<String>,

    /// Override score function: gcc | tdmi.
    #[arg(long)]
    score: Option<String>,

    /// Override base learner: gbdt | linear.
    #[arg(long)]
    learner: Option<String>,

    /// Override the bootstrap/ensemble sample count.
    #[arg(long)]
    b: Option<usize>,

    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Cap on concurrent bootstrap members (0 = automatic).
    #[arg(long)]
    workers: Option<usize>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Interval level for coverage; repeat the flag for several levels.
    #[arg(long = "alpha")]
    alpha: Vec<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inject configured delays into a clean dataset; writes the misaligned
    /// CSV and its ground-truth sidecar.
    Inject,
    /// Train and evaluate the configured method; writes report.json,
    /// model.json, delays.csv and config.resolved.toml.
    Run,
    /// Ablation over the sample count B: one run per entry of --b-list.
    SweepB {
        /// Comma-separated list of distinct B values.
        #[arg(long, value_delimiter = ',')]
        b_list: Vec<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> tsmb::Result<()> {
    let mut cfg = RunConfig::from_toml_path(&cli.config)?;
    cfg.apply_overrides(&Overrides {
        method: cli.method,
        score: cli.score,
        learner: cli.learner,
        b: cli.b,
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
        alphas: cli.alpha,
    })?;

    match cli.command {
        Command::Inject => {
            let (data_path, sidecar_path) = cmd_inject(&cfg)?;
            println!(
                "{}",
                serde_json::json!({
                    "dataset": data_path,
                    "sidecar": sidecar_path,
                })
            );
        }
        Command::Run => {
            let report = cmd_run(&cfg)?;
            println!("{}", summary_json(&report)?);
        }
        Command::SweepB { b_list } => {
            let reports = cmd_sweep_b(&cfg, &b_list)?;
            for report in &reports {
                println!("{}", summary_json(report)?);
            }
        }
    }
    Ok(())
}
