//! Workbench CLI: scenario generation, bijectivity analysis, training,
//! evaluation, and (M, N, SNR) sweeps, driven by one TOML config.
//!
//! Exit codes: 0 success (including diagnostic outcomes such as a degenerate
//! channel set), 1 configuration or validation error, 2 runtime failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use onebit_mimo::estimator::Precision;
use onebit_mimo::Error;

use config::WorkbenchConfig;

#[derive(Parser)]
#[command(name = "onebit-mimo", version, about = "1-bit ADC massive MIMO channel estimation workbench")]
struct Cli {
    /// Workbench config file
    #[arg(short, long, global = true, default_value = "workbench.toml")]
    config: PathBuf,

    /// Override the config's master seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads for pairwise scans and sweep cells (default: all cores)
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    /// Override training precision: f32 or f64
    #[arg(long, global = true)]
    precision: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate channel and quantized-measurement datasets
    Generate,
    /// Mapping-angle and pairwise distinguishability analysis
    Analyze,
    /// Train the dense-network estimator
    Train,
    /// Evaluate a trained checkpoint (NMSE, per-antenna SNR vs bound)
    Eval,
    /// Run the (M, N, SNR) sweep and emit report + plot data
    Sweep,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Domain(_) | Error::Config(_) | Error::Parse { .. } => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> onebit_mimo::Result<()> {
    if let Some(threads) = cli.parallelism {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }

    let mut config = WorkbenchConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(dir) = cli.output_dir {
        config.output.dir = dir;
    }
    if let Some(p) = &cli.precision {
        let precision = match p.as_str() {
            "f32" => Precision::F32,
            "f64" => Precision::F64,
            other => {
                return Err(Error::Config(format!(
                    "precision must be f32 or f64, got {other}"
                )))
            }
        };
        let mut training = config.training.take().unwrap_or_default();
        training.precision = precision;
        config.training = Some(training);
    }

    match cli.command {
        Command::Generate => commands::cmd_generate(&config),
        Command::Analyze => commands::cmd_analyze(&config),
        Command::Train => commands::cmd_train(&config),
        Command::Eval => commands::cmd_eval(&config),
        Command::Sweep => commands::cmd_sweep(&config),
    }
}
