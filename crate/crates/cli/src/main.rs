use std::path::{Path, PathBuf};
use std::process::ExitCode;

use camu_cli::{run, validate, ExperimentConfig, RunError};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "camu", version, about = "Machine unlearning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment. Flags take precedence over the config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the config's seed list; repeat for several seeds.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Replaces the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print and write a two-decimal summary table.
        #[arg(long)]
        summary: bool,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path, seeds: Vec<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig, RunError> {
    let mut config = ExperimentConfig::load(path)?;
    if !seeds.is_empty() {
        config.seeds = seeds;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            summary,
        } => load(&config, seeds, out).and_then(|cfg| {
            let outcome = run(&cfg, summary)?;
            if summary {
                print!("{}", camu_cli::report::summary_table(&outcome.averaged));
            }
            for file in &outcome.manifest.files {
                eprintln!("wrote {}", file.display());
            }
            Ok(())
        }),
        Command::Validate { config } => load(&config, Vec::new(), None).and_then(|cfg| {
            let diagnostics = validate(&cfg);
            if diagnostics.is_empty() {
                println!("ok");
                Ok(())
            } else {
                Err(RunError::Config(diagnostics))
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
