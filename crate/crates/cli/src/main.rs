//! Command-line front end: plan schedules, simulate recovery, verify bounds,
//! enumerate DAGs, and benchmark. Machine-readable JSON goes to stdout,
//! human summaries to stderr.
//!
//! Exit codes: 0 success/match, 1 usage error, 2 verification mismatch,
//! 3 engine contradiction.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "interdag", version, about = "Intervention experiment planning for causal DAG identification", disable_help_subcommand = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate an experiment schedule and report its worst-case bound.
    Plan(PlanArgs),
    /// Run a schedule (or adaptive proposals) against a true DAG through the
    /// recovery engines.
    Simulate(SimulateArgs),
    /// Exhaustively verify sufficiency and worst-case necessity at small n.
    Verify(VerifyArgs),
    /// Count (and optionally list) all DAGs on n vertices.
    Enumerate(EnumerateArgs),
    /// Recovery statistics over seeded random DAGs.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    /// One single-variable intervention per variable except the last.
    Single,
    /// Bit-membership codewords: ⌈log₂ n⌉ experiments, plus a trailing null
    /// experiment at exact powers of two.
    Binary,
    /// Block schedule under an intervention-size cap (requires --kmax).
    Kmax,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    /// Per-pair possibility lattice; scales to any n.
    Pairwise,
    /// Exact consistent-DAG-set tracking; needs n within the enumeration cap.
    Exact,
    /// Run both and cross-check.
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Sufficiency,
    Necessity,
    Both,
}

#[derive(Args)]
pub struct PlanArgs {
    /// Number of variables.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub strategy: Strategy,
    /// Maximum simultaneous interventions (required iff --strategy kmax).
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Write the schedule JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// DAG text file holding the true graph.
    #[arg(long, conflicts_with = "random")]
    pub dag: Option<PathBuf>,
    /// Seeded random true graph: N EDGE_PROB SEED.
    #[arg(long, num_args = 3, value_names = ["N", "EDGE_PROB", "SEED"])]
    pub random: Option<Vec<String>>,
    /// Schedule JSON file to execute.
    #[arg(long, conflicts_with_all = ["strategy", "adaptive"])]
    pub schedule: Option<PathBuf>,
    /// Generate the schedule from a strategy instead of a file.
    #[arg(long, value_enum)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Choose each next experiment adaptively from current knowledge.
    #[arg(long, conflicts_with = "strategy")]
    pub adaptive: bool,
    /// Also orient unshielded colliders from full oracle responses.
    #[arg(long)]
    pub collider_rule: bool,
    #[arg(long, value_enum, default_value_t = EngineChoice::Pairwise)]
    pub engine: EngineChoice,
    /// Override the exhaustive-enumeration cap used by the exact engine.
    #[arg(long, default_value_t = interdag::DEFAULT_ENUM_CAP)]
    pub enum_cap: usize,
    /// Write the run result JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    /// Largest schedule length the necessity search may try.
    #[arg(long)]
    pub max_len: usize,
    /// Restrict searched intervention sets to at most this size.
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_enum, default_value_t = VerifyMode::Both)]
    pub mode: VerifyMode,
    #[arg(long, default_value_t = interdag::DEFAULT_ENUM_CAP)]
    pub enum_cap: usize,
    /// Also run the adaptive game-tree search (n <= 3).
    #[arg(long)]
    pub adaptive_search: bool,
}

#[derive(Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Include every graph as an edge list (n <= 4).
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = interdag::DEFAULT_ENUM_CAP)]
    pub enum_cap: usize,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub edge_prob: f64,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub strategy: Strategy,
    #[arg(long)]
    pub kmax: Option<usize>,
}

/// A command failure with its contractual exit code.
pub enum Failure {
    /// Bad arguments, unreadable/invalid inputs, cap violations.
    Usage(String),
    /// A knowledge engine ran out of possibilities: the responses did not
    /// come from one fixed DAG.
    Contradiction(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Contradiction(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Contradiction(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Plan(args) => commands::plan(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Enumerate(args) => commands::enumerate(&args),
        Command::Bench(args) => commands::bench(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
