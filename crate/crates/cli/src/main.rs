use std::path::PathBuf;
use std::process::ExitCode;

use carleman_cli::{load_config, output_dir, run_experiment, CliError, RunOptions, Subcommand};
use clap::Parser;

/// Carleman weight and observability laboratory for time-dependent transport.
#[derive(Debug, Parser)]
#[command(name = "carleman-lab", version)]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts and the summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for generated solution families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat a failing quantitative observability verdict as a failure.
    #[arg(long)]
    require_observability: bool,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CARLEMAN_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("CARLEMAN_LAB_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot configure thread pool: {e}")))
}

fn run(args: &Args) -> Result<i32, CliError> {
    configure_threads()?;
    let config = load_config(&args.config, args.subcommand)?;
    let options = RunOptions { out: output_dir(args.out.as_deref(), &config), seed: args.seed };
    let artifact = run_experiment(&config, args.subcommand, &options)?;
    let summary = serde_json::to_string_pretty(&artifact.summary).expect("summary serializes");
    println!("{summary}");
    for check in artifact.summary.failures(args.require_observability) {
        log::error!("check failed: {} (value {}, bound {})", check.name, check.value, check.bound);
    }
    Ok(artifact.exit_code(args.require_observability))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(2)
        }
    }
}
