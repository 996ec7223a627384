//! Command-line front end: channel generation, norm computation, identity
//! verification, parameter sweeps and twirl fits, all seeded and emitting
//! reproducible reports.
//!
//! Exit codes: 0 = pass, 1 = verification failure, 2 = usage/input error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod output;

use commands::CmdOutcome;

#[derive(Parser)]
#[command(
    name = "channel-moments",
    about = "Channel norm identities and Haar-sphere matrix integrals",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// RNG seed recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub samples: u64,

    /// Absolute tolerance for exact identities.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,

    /// Multiplier on the Monte Carlo standard error.
    #[arg(long, global = true, default_value_t = 5.0)]
    pub sigma: f64,

    /// Emit the JSON report on stdout instead of the human summary.
    #[arg(long, global = true)]
    pub json: bool,

    /// Write the primary artifact (report, channel or table) to a file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a channel and write its JSON representation.
    Gen(GenArgs),
    /// Compute the Hilbert-Schmidt and induced norms of a channel.
    Norms(NormsArgs),
    /// Verify an identity by its stable id.
    Verify(VerifyArgs),
    /// Classify a channel as isometric, replacement, or neither.
    Classify(ClassifyArgs),
    /// Sweep an interpolation family between the two norm-sum bounds.
    Sweep(SweepArgs),
    /// Fit a map to the covariant model λX + μ tr(X) I via twirling.
    Twirl(TwirlArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenFamily {
    Depolarizing,
    Isometric,
    Replacement,
    Elambda,
    Random,
}

#[derive(Args)]
pub struct GenArgs {
    /// Channel family to generate.
    #[arg(value_enum)]
    pub family: GenFamily,

    /// Input dimension n.
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    /// Output dimension d.
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    /// Interpolation parameter for elambda.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Choi rank for the random family (defaults to n*d).
    #[arg(long)]
    pub rank: Option<usize>,

    /// Matrix JSON file holding the isometry for the isometric family.
    #[arg(long)]
    pub matrix: Option<PathBuf>,

    /// Matrix JSON file holding the target unit column for replacement /
    /// elambda (defaults to the first basis vector).
    #[arg(long)]
    pub psi: Option<PathBuf>,
}

#[derive(Args)]
pub struct NormsArgs {
    /// Channel JSON file.
    #[arg(long)]
    pub channel: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Identity id: prop3a, prop3b, prop3c, prop3d, cor6a, cor6b, cor7a,
    /// cor7b, prop8, thm9a, thm9b, remark3, twirl, thm1, eq51.
    pub id: String,

    /// Sphere / input dimension n.
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    /// Output dimension d (thm1 generators).
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    /// Tensor power k (prop8).
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Channel JSON file (thm1).
    #[arg(long)]
    pub channel: Option<PathBuf>,

    /// Generator name for thm1: depolarizing, identity, isometric,
    /// replacement, elambda, random.
    #[arg(long)]
    pub gen: Option<String>,

    /// Interpolation parameter for the elambda generator.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Choi rank for the random generator.
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Args)]
pub struct ClassifyArgs {
    /// Channel JSON file.
    #[arg(long)]
    pub channel: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Family: e_lambda or cor10_t.
    #[arg(long)]
    pub family: String,

    /// Input dimension n.
    #[arg(long, default_value_t = 2)]
    pub n: usize,

    /// Output dimension d.
    #[arg(long, default_value_t = 2)]
    pub d: usize,

    /// Number of grid points on [0, 1] (at least 2).
    #[arg(long, default_value_t = 11)]
    pub grid: usize,
}

#[derive(Args)]
pub struct TwirlArgs {
    /// Map to fit: identity, depolarizing, or random.
    #[arg(long, default_value = "identity")]
    pub map: String,

    /// Channel JSON file whose superoperator is fitted (overrides --map).
    #[arg(long)]
    pub channel: Option<PathBuf>,

    /// Input dimension n for the built-in maps.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CHANNEL_MOMENTS_THREADS") {
        if let Ok(count) = threads.parse::<usize>() {
            if count >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(count).build_global();
            }
        }
    }
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(CmdOutcome::Pass) => ExitCode::SUCCESS,
        Ok(CmdOutcome::Fail) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
