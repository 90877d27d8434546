use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twoview_cli::commands::{cmd_estimate, cmd_evaluate, cmd_simulate, EstimateArgs, DEFAULT_MIN_MATCHES};
use twoview_cli::CliError;
use twoview_core::simlab::Estimator;

#[derive(Parser)]
#[command(
    name = "twoview",
    version,
    about = "Two-view relative pose estimation and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the relative pose of one match file.
    Estimate {
        #[arg(long)]
        matches: PathBuf,
        #[arg(long)]
        intrinsics: Option<PathBuf>,
        /// lirp, lirp-reference, gnc-irls, gnc-ransac or ligt-refine.
        #[arg(long)]
        method: Estimator,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// LiGT inlier threshold.
        #[arg(long)]
        theta: Option<f64>,
        /// RANSAC sample size.
        #[arg(long)]
        ns: Option<usize>,
        /// RANSAC iterations.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MIN_MATCHES)]
        min_matches: usize,
        /// Ground-truth pose; adds error metrics to the report.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-pair CSV.
        #[arg(long)]
        residuals: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep described by a TOML file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rotation errors of estimate reports against ground-truth poses.
    Evaluate {
        #[arg(long = "report", required = true)]
        reports: Vec<PathBuf>,
        #[arg(long = "truth", required = true)]
        truths: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate {
            matches,
            intrinsics,
            method,
            seed,
            theta,
            ns,
            iters,
            min_matches,
            truth,
            out,
            residuals,
        } => cmd_estimate(&EstimateArgs {
            matches,
            intrinsics,
            method,
            seed,
            theta,
            sample_size: ns,
            iterations: iters,
            min_matches,
            truth,
            out,
            residuals,
        })
        .map(drop),
        Command::Simulate { config, out } => cmd_simulate(&config, &out).map(drop),
        Command::Evaluate { reports, truths, out } => cmd_evaluate(&reports, &truths, out.as_deref()).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
