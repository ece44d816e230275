//! `forge` — staged pipeline for building execution-verified parallel code
//! corpora, SFT mixtures, task metrics, and alignment reports.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forge_cli::config::{parse_seed_override, PipelineConfig};
use forge_cli::error::StageResult;
use forge_cli::{report, stages};

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Build execution-verified parallel code corpora and their SFT mixtures, metrics, and alignment reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Declarative pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Reuse per-sample results already on disk where the stage supports it.
    #[arg(long)]
    resume: bool,
    /// Override a stage seed, e.g. --seed-override mix=7. Repeatable.
    #[arg(long = "seed-override", value_name = "STAGE=SEED")]
    seed_override: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// stats, mixture, eval, or alignment.
    #[arg(long)]
    kind: String,
    /// Also render SVG plots next to the CSVs.
    #[arg(long)]
    plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and filter a raw coding dataset.
    Ingest(StageArgs),
    /// Sample synthetic translations through the configured endpoint.
    Translate(StageArgs),
    /// Judge all candidates and keep the execution-verified corpus.
    Verify(StageArgs),
    /// Build the configured SFT mixtures from the verified corpus.
    Mix(StageArgs),
    /// Score sampled model responses (generation or validation task).
    Evaluate(StageArgs),
    /// Compute cross-language representation alignment.
    Align(StageArgs),
    /// Emit report CSVs (and optional plots) from stage outputs.
    Report(ReportArgs),
}

fn load_config(args: &StageArgs) -> StageResult<PipelineConfig> {
    let mut config = PipelineConfig::load(&args.config)?;
    let mut overrides = BTreeMap::new();
    for raw in &args.seed_override {
        let (stage, seed) = parse_seed_override(raw)?;
        overrides.insert(stage, seed);
    }
    config.override_seeds(&overrides)?;
    Ok(config)
}

fn run(cli: Cli) -> StageResult<()> {
    match cli.command {
        Command::Ingest(args) => stages::run_stage(&load_config(&args)?, "ingest", args.resume),
        Command::Translate(args) => {
            stages::run_stage(&load_config(&args)?, "translate", args.resume)
        }
        Command::Verify(args) => stages::run_stage(&load_config(&args)?, "verify", args.resume),
        Command::Mix(args) => stages::run_stage(&load_config(&args)?, "mix", args.resume),
        Command::Evaluate(args) => {
            stages::run_stage(&load_config(&args)?, "evaluate", args.resume)
        }
        Command::Align(args) => stages::run_stage(&load_config(&args)?, "align", args.resume),
        Command::Report(args) => {
            let config = PipelineConfig::load(&args.config)?;
            let written = report::emit_report(&config, &args.kind, args.plots)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
