use std::path::PathBuf;
use std::process::ExitCode;

use advdiff_cli::{ablate, evaluate_checkpoint, export_curves, run, AblationAxis, CliError, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "advdiff", version, about = "Adversarial differential discriminator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train according to a config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set train.ppo.clip=0.1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Evaluate a saved policy with its mean action.
    Evaluate {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 16)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run a config over every setting of one axis and every seed.
    Ablate {
        config: PathBuf,
        /// gp_mode, exp_weights or reward_source.
        #[arg(long)]
        axis: AblationAxis,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Rebuild curves/*.csv from a run's metrics.jsonl.
    ExportCurves { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, set } => {
            let cfg = ExperimentConfig::load(&config, &set)?;
            let report = run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Evaluate {
            checkpoint,
            episodes,
            seed,
            horizon,
        } => {
            if episodes == 0 {
                return Err(CliError::Config("--episodes must be positive".into()));
            }
            let report = evaluate_checkpoint(&checkpoint, episodes, seed, horizon)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Ablate { config, axis, set } => {
            let cfg = ExperimentConfig::load(&config, &set)?;
            let result = ablate(&cfg, axis)?;
            for s in &result.summary {
                println!(
                    "{:<12} {:>3} runs  final error {:.4} ± {:.4}",
                    s.setting, s.runs, s.final_error.mean, s.final_error.std
                );
            }
            println!("tables in {}", result.dir.display());
        }
        Command::ExportCurves { run_dir } => {
            for p in export_curves(&run_dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
