use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddlab::harness::DEFAULT_MASTER_SEED;
use ddlab_cli::{default_workers, parse_seed, probe_breakdown, run, CliError, RunManifest, SEED_ENV};

#[derive(Parser)]
#[command(name = "ddlab", about = "Double-descent experiments for interpolating and robust regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios of a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Also write SVG charts to <out>/plots.
        #[arg(long)]
        plots: bool,
        /// Run only the named scenario.
        #[arg(long)]
        only: Option<String>,
    },
    /// Refit after shifting one training response by growing magnitudes.
    ProbeBreakdown {
        #[arg(long)]
        estimator: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the version.
    Version,
}

fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(&v).map(Some),
        Err(_) => Ok(None),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            plots,
            only,
        } => {
            let manifest = RunManifest {
                workers,
                plots,
                only,
                seed_override: seed_override()?,
                ..RunManifest::new(config, out)
            };
            let report = run(&manifest)?;
            for note in &report.notes {
                eprintln!("{note}");
            }
            for path in &report.written {
                println!("{}", path.display());
            }
        }
        Command::ProbeBreakdown { estimator, out } => {
            let seed = seed_override()?.unwrap_or(DEFAULT_MASTER_SEED);
            let rows = probe_breakdown(&estimator, &out, seed)?;
            for (m, norm) in rows {
                println!("{m:e}\t{norm}");
            }
            println!("{}", out.join("breakdown.csv").display());
        }
        Command::Version => println!("ddlab {}", env!("CARGO_PKG_VERSION")),
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
