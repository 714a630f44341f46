use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hnls_core::cli::{exit_code, run, Command, EXIT_BAD_CONFIG, EXIT_CHECK_FAILED, EXIT_OK};
use hnls_core::config::RunConfig;

#[derive(Parser)]
#[command(name = "hnls", version, about = "Half-line higher-order NLS solver and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Linear solution y + z + q on the configured grid.
    SolveLinear,
    /// Picard iteration for the nonlinear problem.
    SolveNonlinear,
    /// Symmetry, Vieta and half-plane checks on random spectral samples.
    VerifySpectral,
    /// Recovery, global relation and vanish checks for the reduced problem.
    VerifyIbvp,
    /// Decay-rate checks for the dispersive and boundary kernels.
    VerifyDispersion,
    /// Refinement tables for the finite-difference and contour solvers.
    Convergence,
    /// Contour nodes used by the reduced solver.
    EmitContour,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::SolveLinear => Command::SolveLinear,
            Sub::SolveNonlinear => Command::SolveNonlinear,
            Sub::VerifySpectral => Command::VerifySpectral,
            Sub::VerifyIbvp => Command::VerifyIbvp,
            Sub::VerifyDispersion => Command::VerifyDispersion,
            Sub::Convergence => Command::Convergence,
            Sub::EmitContour => Command::EmitContour,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_BAD_CONFIG as u8);
        }
    }
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let code = match run(cli.command.into(), &cfg, &cli.out) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("verification failed; see {}", cli.out.join("report.csv").display());
            EXIT_CHECK_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
