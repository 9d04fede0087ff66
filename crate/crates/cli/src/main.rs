use std::path::PathBuf;
use std::process::ExitCode;

use aniso_core::harness;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aniso", version, about = "Verify Fourier-side estimates for anisotropic variable Hardy spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a JSON config.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the verdict table for a finished run.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("ANISO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("Config: ANISO_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("Config: {e}"))
}

fn fail(message: impl ToString) -> ExitCode {
    eprintln!("error: {}", message.to_string().replace('\n', " "));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    match cli.command {
        Command::Verify { config } => match harness::run(&config) {
            Ok(outcome) => {
                print!("{}", harness::render_table(&outcome.summaries));
                let failing = outcome.failing();
                if failing.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("failing checks: {}", failing.join(", "));
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::Report { dir } => match harness::load_report(&dir) {
            Ok(summaries) => {
                print!("{}", harness::render_table(&summaries));
                if summaries.iter().all(|s| s.passed()) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
    }
}
