//! `tndg`: solve, enumerate, certify and census tensor eigen-objects.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 invalid input, 3 no converged result, 4 a
//! nondegeneracy theorem was contradicted, 5 a census invariant failed.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "tndg",
    version,
    about = "Tensor eigenpairs and nondegeneracy certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find and certify eigen-objects of a tensor file.
    Solve {
        kind: SolveKind,
        #[command(flatten)]
        common: Common,
    },
    /// Orthogonally decomposable tensors from a spec file or a seed.
    Odeco {
        action: OdecoAction,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo census over Gaussian tensors.
    Census(CensusArgs),
    /// Exhaustive n = 2 oracles.
    Oracle {
        kind: OracleKind,
        #[command(flatten)]
        common: Common,
        /// Sweep grid size.
        #[arg(long, default_value_t = tndg::census::DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveKind {
    Z,
    Svt,
    H,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OdecoAction {
    Build,
    Enumerate,
    Certify,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Sweep,
    Ecount,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Input file.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solver residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative threshold of the nondegeneracy verdicts.
    #[arg(long = "cert-tol", default_value_t = tndg::zeigen::DEFAULT_CERT_TOL)]
    pub cert_tol: f64,
    /// Iteration cap per solver run.
    #[arg(long, default_value_t = 10_000)]
    pub maxit: usize,
    /// Multistart count; solver default when absent.
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Dimension of a random spec.
    #[arg(long)]
    pub n: Option<usize>,
    /// Rank of a random spec; defaults to n.
    #[arg(long)]
    pub r: Option<usize>,
    /// Order of a random spec.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct CensusArgs {
    #[arg(long, value_enum)]
    pub kind: SolveKind,
    /// Format as comma-separated dims, e.g. 3,3,3.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Dimension for z and h, combined with --k.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = tndg::census::DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

/// A failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Unconverged(String),
    Contradiction(String),
    CensusInvariant(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Unconverged(_) => 3,
            Failure::Contradiction(_) => 4,
            Failure::CensusInvariant(_) => 5,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m)
            | Failure::Unconverged(m)
            | Failure::Contradiction(m)
            | Failure::CensusInvariant(m)
            | Failure::Io(m) => m,
        }
    }
}

impl From<tndg::TensorError> for Failure {
    fn from(e: tndg::TensorError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("TNDG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::Input(format!(
            "TNDG_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve { kind, common } => commands::solve(kind, &common),
        Command::Odeco {
            action,
            spec,
            common,
        } => commands::odeco(action, &spec, &common),
        Command::Census(args) => commands::census(&args),
        Command::Oracle { kind, common, grid } => commands::oracle(kind, &common, grid),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tndg: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
