use clap::Parser;
use nematikin::parallel::pool_from_env;
use nematikin_cli::{read_config, run, Mode, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Kinetic and continuum scenarios for rarefied nematic gases.
///
/// Exit status: 0 pass, 1 invariant failure, 2 config error, 3 runtime error.
/// NEMATIKIN_THREADS caps the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "nematikin", version)]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed given in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `out` from the scenario, else ./nematikin-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = read_config(&cli.config).and_then(|config| {
        pool_from_env().install(|| run(cli.mode, config, Overrides { seed: cli.seed, out: cli.out }))
    });
    match result {
        Ok(outcome) => {
            println!("{}: {}", if outcome.passed { "pass" } else { "FAIL" }, outcome.summary);
            for path in &outcome.artifacts {
                println!("  wrote {}", path.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
