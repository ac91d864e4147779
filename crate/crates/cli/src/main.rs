use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vbpg_cli::checks::{run_all, CheckContext};
use vbpg_cli::commands::{cmd_certify, cmd_run};
use vbpg_cli::{CliError, CliResult};

/// Variable Bregman proximal gradient runs and error-bound diagnostics.
#[derive(Parser)]
#[command(name = "vbpg", version)]
struct Cli {
    /// Worker threads for parallel sampling (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the diagnostics listed in the config file.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in reproduction checks and write manifest.json.
    PaperChecks {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Run { config, out, seed } => {
            let s = cmd_run(&config, &out, seed)?;
            println!("{}: {} iterations, F = {}", s.problem, s.iterations, s.f_limit);
        }
        Command::Certify { config, out, seed } => {
            for (label, cert) in cmd_certify(&config, &out, seed)? {
                println!("{label}: {:?} (estimate {:?})", cert.verdict, cert.constant_estimate);
            }
        }
        Command::PaperChecks { out, seed } => {
            let manifest = run_all(&CheckContext::new(out, seed))?;
            for c in &manifest.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail);
            }
            if !manifest.passed {
                return Err(CliError::ChecksFailed(manifest.failing()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VBPG_LOG", "warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
