//! Command-line front end: explore, select, evaluate, f1, sweep and report.
//!
//! Exit codes:
//!
//! | code | meaning                                    |
//! |------|--------------------------------------------|
//! | 0    | success                                    |
//! | 1    | usage error (bad flags or arguments)       |
//! | 2    | configuration parse or validation error    |
//! | 3    | runtime error (I/O, model, numerical)      |

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod error;
pub mod manifest;
pub mod plot;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "uav-codesign", version, about = "Joint NN policy and accelerator design for autonomous UAVs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bayesian optimization over the config's search space.
    Explore(ExploreArgs),
    /// Pick the design that flies the most missions.
    Select(SelectArgs),
    /// Evaluate one policy/accelerator pair.
    Evaluate(EvaluateArgs),
    /// Safe velocity versus action throughput.
    F1(F1Args),
    /// Evaluate every point of a small search space.
    Sweep(SweepArgs),
    /// Mission comparison across scenarios.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Problem TOML file.
    #[arg(long, env = "CODESIGN_CONFIG")]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Overrides the config seed.
    #[arg(long, env = "CODESIGN_SEED")]
    pub seed: Option<u64>,
    /// Overrides the config budget.
    #[arg(long, env = "CODESIGN_BUDGET")]
    pub budget: Option<usize>,
    #[arg(long, env = "CODESIGN_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Archive written by `explore` (or `sweep`).
    #[arg(long, env = "CODESIGN_ARCHIVE")]
    pub archive: Option<PathBuf>,
    /// Also consider the config's literal `[[designs]]` rows.
    #[arg(long)]
    pub literals: bool,
    /// Retarget an over-provisioned choice to the knee.
    #[arg(long)]
    pub fine_tune: bool,
    /// Technology node for fine-tuning, nanometres.
    #[arg(long, requires = "fine_tune")]
    pub tech_node: Option<f64>,
    #[arg(long, env = "CODESIGN_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Defaults below are the first value of each search dimension.
    #[arg(long)]
    pub layers: Option<u32>,
    #[arg(long)]
    pub filters: Option<u32>,
    #[arg(long)]
    pub rows: Option<u32>,
    #[arg(long)]
    pub cols: Option<u32>,
    #[arg(long)]
    pub sram_ifmap: Option<u64>,
    #[arg(long)]
    pub sram_filter: Option<u64>,
    #[arg(long)]
    pub sram_ofmap: Option<u64>,
    /// Bytes per cycle.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// `os` or `ws`.
    #[arg(long)]
    pub dataflow: Option<String>,
    #[arg(long)]
    pub frequency: Option<f64>,
    /// Write per-layer cycle and traffic counts.
    #[arg(long)]
    pub dump_layers: bool,
    /// Directory for output files; prints JSON to stdout when absent.
    #[arg(long, env = "CODESIGN_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct F1Args {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Compute payload in grams.
    #[arg(long, default_value_t = 0.0)]
    pub payload: f64,
    #[arg(long, default_value_t = 200.0)]
    pub max_fps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Also write an SVG plot with design overlays.
    #[arg(long)]
    pub plot: bool,
    /// Archive whose designs are overlaid on the plot.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[arg(long, env = "CODESIGN_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Largest space that will be enumerated.
    #[arg(long, default_value_t = commands::DEFAULT_SWEEP_CAP)]
    pub cap: u64,
    #[arg(long, env = "CODESIGN_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One or more problem configs (scenarios).
    #[arg(long = "config", required = true, num_args = 1..)]
    pub configs: Vec<PathBuf>,
    /// Archives paired with the configs in order; a single archive is
    /// shared by every config.
    #[arg(long = "archive", num_args = 1..)]
    pub archives: Vec<PathBuf>,
    /// Design name that ratios are normalized to.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, env = "CODESIGN_OUT")]
    pub out: PathBuf,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Explore(a) => commands::cmd_explore(&a).map(|_| ()),
        Command::Select(a) => commands::cmd_select(&a).map(|_| ()),
        Command::Evaluate(a) => commands::cmd_evaluate(&a).map(|_| ()),
        Command::F1(a) => commands::cmd_f1(&a).map(|_| ()),
        Command::Sweep(a) => commands::cmd_sweep(&a).map(|_| ()),
        Command::Report(a) => commands::cmd_report(&a).map(|_| ()),
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
