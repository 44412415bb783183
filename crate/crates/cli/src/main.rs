#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use blowup_core::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Special functions, regime classification, blow-up solves and
/// nonexistence audits for `(−Δ)^α u + |u|^{p−1}u = 0` on (−1, 1) ∖ {0}.
#[derive(Debug, Parser)]
#[command(name = "blowup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate c, C, T and c'' over an (alpha, tau) grid as CSV.
    Specfun(Flags),
    /// alpha0 and the roots tau0, tau1 for a list of alpha, as JSON.
    Critical(Flags),
    /// Print the regime of (alpha, p) and optionally tau.
    Classify(Flags),
    /// Solve for the interior blow-up solution and fit its rate.
    Solve(Flags),
    /// Certify the residual signs of the nonexistence or special-family constructions.
    Audit(Flags),
}

/// Flags shared by every command. Lists accept `a,b,c` or `start:stop:step`.
#[derive(Debug, Clone, Args)]
pub struct Flags {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    #[arg(long)]
    pub n_per_side: Option<usize>,
    #[arg(long)]
    pub grading: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Root tolerance for `critical`, Newton tolerance for `solve`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// `start:max`, `start:end` or `n1,n2,...`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Rate-fit window in D as `lo,hi`.
    #[arg(long)]
    pub window: Option<String>,
    /// Output file, or directory for `solve`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
    /// With `solve --out`, also write the operator matrix.
    #[arg(long)]
    pub dump_matrix: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Regime => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Specfun(f) => commands::specfun(&f),
        Command::Critical(f) => commands::critical(&f),
        Command::Classify(f) => commands::classify(&f),
        Command::Solve(f) => commands::solve(&f),
        Command::Audit(f) => commands::audit(&f),
    };
    match result {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed) => ExitCode::from(exit_code(ErrorKind::Numerical)),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
