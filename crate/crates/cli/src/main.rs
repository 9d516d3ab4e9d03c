use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use sarheight_cli::{config, error_line, Failure, Run, Stage};

#[derive(Parser)]
#[command(name = "sarheight", version, about = "Synthetic SAR building height experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config field, e.g. `training.learning_rate=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Worker threads; 1 gives bit-exact reruns.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate footprints and amplitude/height rasters per city.
    Simulate,
    /// Tile rasters and extract, deduplicate and subsample building samples.
    BuildDataset,
    /// Train one model per experiment.
    Train,
    /// Predict test-set heights per experiment.
    Predict,
    /// Compute metrics, tables and CSV exports per experiment.
    Evaluate,
    /// Write the consolidated run report.
    Report,
    /// All stages in order.
    Run,
}

fn execute(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let run = Run::new(config::load(path, &cli.sets, cli.out.as_deref())?);
    let stages: Vec<Stage> = match cli.command {
        Command::Simulate => vec![Stage::Simulate],
        Command::BuildDataset => vec![Stage::BuildDataset],
        Command::Train => vec![Stage::Train],
        Command::Predict => vec![Stage::Predict],
        Command::Evaluate => vec![Stage::Evaluate],
        Command::Report => vec![Stage::Report],
        Command::Run => Stage::ALL.to_vec(),
    };
    for stage in stages {
        for line in stage.run(&run)? {
            println!("{}: {line}", stage.name());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(sarheight_cli::classify(&e).0)
        }
    }
}
