use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pedwait::commands::{self, Context};
use pedwait::{CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "pedwait", version, about = "Pedestrian wait-time survival modelling pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed from which unset command seeds are derived.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a configuration value, e.g. `--set train.epochs=50`. Repeatable.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    sets: Vec<String>,
    /// Print failures as a JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic cohort from catalog scenarios.
    Simulate,
    /// Fit the proportional-hazards model and write the coefficient table.
    Fit,
    /// VIF screening table and RReliefF ranking.
    Rank,
    /// Train the four compared models on a shared 80/20 split.
    Train,
    /// Shapley attributions and conditional interaction tables.
    Explain,
    /// D-optimal scenario design by simulated annealing.
    Design,
    /// Score saved models on a dataset.
    Evaluate,
}

fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let ctx = Context::new(config.with_overrides(&cli.sets)?, &cli.out)?;
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Fit => commands::fit(&ctx),
        Command::Rank => commands::rank(&ctx),
        Command::Train => commands::train_models(&ctx),
        Command::Explain => commands::explain(&ctx),
        Command::Design => commands::design(&ctx),
        Command::Evaluate => commands::evaluate(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", serde_json::to_string(&e.report()).expect("error report serializes"));
            } else {
                eprintln!("error: {}", e);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
