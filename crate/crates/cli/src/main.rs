mod commands;
mod config;
mod expr;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;
use config::CliError;

/// Charges on dyadic cubes: transforms, Young integrals, gauge integrals,
/// fractional Brownian sheets and Hölder diagnostics.
#[derive(Parser, Debug)]
#[command(name = "charges", version, about)]
struct Cli {
    /// JSON file of parameters; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert between cube charges and Haar coefficients.
    Transform(TransformArgs),
    /// Young integral of a vertex field against a cube charge.
    Young(YoungArgs),
    /// One-dimensional Young pairing of two sampled functions.
    Young1d(Young1dArgs),
    /// Henstock–Kurzweil integral of a function of one variable.
    Hk(HkArgs),
    /// Divergence theorem check on a dyadic figure.
    Divcheck(DivcheckArgs),
    /// Brownian paths from the Lévy–Ciesielski series.
    Bm(BmArgs),
    /// Fractional Brownian sheets by exact Gaussian sampling.
    Fbs(FbsArgs),
    /// Moment test for chargeability of an ensemble of fields.
    Chargeability(ChargeabilityArgs),
    /// Hölder estimate of a one-dimensional sampled function.
    Holder(HolderArgs),
    /// Volume, perimeter and shape coefficients of a dyadic figure.
    Geometry(GeometryArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Transform(a) => transform(a, cfg),
        Command::Young(a) => young(a, cfg),
        Command::Young1d(a) => young1d(a, cfg),
        Command::Hk(a) => hk(a, cfg),
        Command::Divcheck(a) => divcheck(a, cfg),
        Command::Bm(a) => bm(a, cfg),
        Command::Fbs(a) => fbs(a, cfg),
        Command::Chargeability(a) => chargeability(a, cfg),
        Command::Holder(a) => holder(a, cfg),
        Command::Geometry(a) => geometry(a, cfg),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
