//! `chlab`: deterministic experiment runner for `chlab-core`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] chlab_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// What a command found, independent of what it wrote.
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Parser)]
#[command(name = "chlab", version, about = "Numerical experiments on complex hyperbolic dynamics and fractal uncertainty")]
#[command(after_help = "Exit status: 0 pass, 1 criterion failure, 2 usage or configuration error.\n\
    Every option can also come from --config FILE (key = value per line); flags win.")]
struct Cli {
    /// key = value file supplying defaults for any long option
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Output file (written atomically); stdout if omitted
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Residuals of the su(n,1) bracket, nilpotency, rotation and matrix-action relations (JSON)
    AlgebraCheck(commands::AlgebraArgs),
    /// Frame pushforward under the geodesic flow against finite differences (CSV)
    #[command(after_help = "CSV columns: t,index,label,factor,pushforward,finite_difference,relative_error")]
    FlowExpansion(commands::FlowArgs),
    /// Symplectic pairings, step-halving ratios and straightening residuals at random bases (JSON)
    SymplecticCheck(commands::SymplecticArgs),
    /// Diameters of propagated slow rectangles (CSV)
    #[command(after_help = "CSV columns: alpha,sign,t,m,diameter,diameter_over_alpha_et\n\
        The constant fit for each alpha is printed to stderr.")]
    Rectangle(commands::RectangleArgs),
    /// Norm of 1_{Omega-} F_N 1_{Omega+} for a set family (CSV)
    #[command(after_help = "CSV columns: N_or_h,set_id,nu,alpha0,alpha1,norm,method,residual")]
    FupNorm(commands::FupNormArgs),
    /// Decay exponent fitted over a sweep of N (JSON)
    FupBeta(commands::FupBetaArgs),
    /// Sizes of the word sets and the empirical counting constant (CSV)
    #[command(after_help = "CSV columns: h,eps0,alpha,N0,size_Zc,size_X,size_Y,C_empirical\n\
        h values are decimals or e-K for exp(-K).")]
    WordsCount(commands::WordsArgs),
    /// Full acceptance suite; writes a JSON verdict per criterion
    All(commands::AllArgs),
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    match cli.command {
        Command::AlgebraCheck(a) => commands::algebra_check(a),
        Command::FlowExpansion(a) => commands::flow_expansion(a),
        Command::SymplecticCheck(a) => commands::symplectic_check(a),
        Command::Rectangle(a) => commands::rectangle(a),
        Command::FupNorm(a) => commands::fup_norm(a),
        Command::FupBeta(a) => commands::fup_beta(a),
        Command::WordsCount(a) => commands::words_count(a),
        Command::All(a) => commands::all(a),
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
