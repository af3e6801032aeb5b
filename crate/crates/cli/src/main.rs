use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thickscape::Convention;
use thickscape_cli::{configure_threads, emit_outputs, load_scenario, run_command, CliError, Command, RunOptions};

#[derive(Parser)]
#[command(name = "thickscape", version, about = "Return-map dynamics and Morse analysis of thickness functions")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of orbit seeds (overrides the scenario).
    #[arg(long)]
    seeds: Option<usize>,
    /// Draw seeds at random from this seed.
    #[arg(long = "rng-seed")]
    rng_seed: Option<u64>,
    /// Curvature sign convention for curvature-gap values: paper|standard.
    #[arg(long, default_value = "standard")]
    convention: Convention,
}

fn run(args: Args) -> Result<bool, CliError> {
    configure_threads()?;
    if args.seeds == Some(0) {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let scenario = load_scenario(&args.scenario)?;
    let opts = RunOptions { seeds: args.seeds, rng_seed: args.rng_seed, convention: args.convention };
    let bundle = run_command(&scenario, args.command, &opts)?;
    for path in emit_outputs(&bundle, &args.out)? {
        println!("{}", path.display());
    }
    Ok(bundle.passed.unwrap_or(true))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("thickscape: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("thickscape: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
