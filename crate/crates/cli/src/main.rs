mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(hocn::Error),
}

impl From<hocn::Error> for CliError {
    fn from(e: hocn::Error) -> Self {
        CliError::Runtime(e)
    }
}

/// High-order common-neighbor link prediction toolkit.
#[derive(Parser, Debug)]
#[command(name = "hocn", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key=value configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// ocn or ocnp
    #[arg(long, global = true)]
    pub variant: Option<String>,
    #[arg(long, global = true)]
    pub exclude_endpoints: bool,
    #[arg(long, global = true)]
    pub use_valid_as_input: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit rows as a JSON array instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load an edge list, split it and write a split manifest.
    Prepare(commands::PrepareArgs),
    /// Per-pair scores for one split part.
    Score(commands::ScoreArgs),
    /// Fit the scoring model and write model, state and meta files.
    Train(commands::TrainArgs),
    /// Hits@K and MRR for one split part.
    Eval(commands::EvalArgs),
    /// Order correlation, coefficient of variation or per-edge JSD.
    Diagnose(commands::DiagnoseArgs),
    /// Bound evaluation over k, or Monte-Carlo bound validation.
    Theory(commands::TheoryArgs),
    /// Timing sweep over batch sizes with a linear fit.
    Bench(commands::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
