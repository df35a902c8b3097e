use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use agg_cli::{CliError, ExitStatus, RunConfig};

#[derive(Parser)]
#[command(name = "agg", version, about = "Diffuse-interface two-phase flow about an equilibrium profile")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured scenario and write series.csv and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite and print its JSON report.
    Verify {
        /// potential | operators | korn | convergence | contraction | conservation
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the equilibrium profile and pressure snapshots.
    Equilibrium {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<ExitStatus, CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out
                .or_else(|| cfg.output.directory.clone())
                .ok_or_else(|| CliError::Config("no output directory given".into()))?;
            let summary = agg_cli::run(&cfg, &out)?;
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            Ok(ExitStatus::Ok)
        }
        Command::Verify { suite, config } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let report = agg_cli::verify_suite(&suite, cfg.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(if report.passed { ExitStatus::Ok } else { ExitStatus::VerifyFailed })
        }
        Command::Equilibrium { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let summary = agg_cli::equilibrium(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(ExitStatus::Ok)
        }
    }
}

fn main() -> ExitCode {
    let status = execute(Cli::parse()).unwrap_or_else(|e| {
        eprintln!("agg: {e}");
        e.status()
    });
    ExitCode::from(status.code() as u8)
}
