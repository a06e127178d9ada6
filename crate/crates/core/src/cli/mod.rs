//! The `lamplab` command line.
//!
//! Every report is a JSON object `{"config", "report", "passed"}` (or a CSV
//! table preceded by a `# config:` line), so a run can be reproduced from its
//! own output. Exit codes: 0 success, 1 a verified bound failed (the report
//! names the offending pair), 2 usage or computation error.

mod commands;

use crate::rational::{self, Q};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::path::PathBuf;

pub const THREADS_ENV: &str = "LAMPLAB_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    fn failed(context: &str, err: impl std::fmt::Display) -> Self {
        CliError::Failed(format!("{context}: {err}"))
    }
}

fn parse_q(text: &str) -> Result<Q, String> {
    rational::parse(text).map_err(|e| e.to_string())
}

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "lamplab", version, about = "Lamplighter metrics, TSP efficiency and tree embeddings over finite metric spaces")]
pub struct Cli {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Largest target set solved exactly by Held-Karp.
    #[arg(long, global = true, default_value_t = crate::lamplighter::DEFAULT_TARGET_CAP)]
    pub cap_targets: usize,
    /// Largest space accepted by exact efficiency enumeration.
    #[arg(long, global = true, default_value_t = crate::lamplighter::DEFAULT_EFFICIENCY_CAP)]
    pub cap_n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Path,
    Cycle,
    Grid,
    Hypercube,
    Star,
    Rose,
}

/// A base space: a named family or a JSON file (space or graph format).
#[derive(Args, Debug, Clone, Serialize)]
pub struct SpaceArgs {
    #[arg(long, value_enum, conflicts_with = "input")]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Arm or cycle length for star and rose.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistMetric {
    Dlam,
    Dgraph,
    Ddil,
    Tsp,
    Tscp,
    Rho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TourMode {
    Exact,
    Heuristic,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublingArg {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductArg {
    L1,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkovArg {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Emit a generated or loaded space.
    Gen {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
    },
    /// Distance between two lamp points given as JSON `{"lamps": [..], "pos": i}`.
    Dist {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value_t = DistMetric::Dlam)]
        metric: DistMetric,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_enum, default_value_t = TourMode::Exact)]
        mode: TourMode,
    },
    /// TSP efficiency constant, optionally checked against `--K`.
    Efficiency {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value_t = SearchMode::Exact)]
        mode: SearchMode,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long = "K", value_parser = parse_q)]
        #[serde(rename = "K", with = "rational::serde_q_opt")]
        k_bound: Option<Q>,
    },
    /// Doubling constant, checked against `4K + 1`.
    Doubling {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, value_enum, default_value_t = DoublingArg::Exact)]
        mode: DoublingArg,
        /// Efficiency constant to test against; certified exactly when omitted and the space is within `--cap-n`.
        #[arg(long = "K", value_parser = parse_q)]
        #[serde(rename = "K", with = "rational::serde_q_opt")]
        k_bound: Option<Q>,
    },
    /// Tree embedding of the lamplighter over a line space, with measured distortion.
    EmbedLamz {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, value_parser = parse_q, default_value = "1")]
        #[serde(with = "rational::serde_q")]
        sigma: Q,
        #[arg(long, value_enum, default_value_t = ProductArg::L1)]
        product: ProductArg,
        #[arg(long)]
        max_lamps: Option<usize>,
    },
    /// Lift of a coordinate system to the lamplighter, with measured distortion.
    Lift {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        /// CoordinateSystem JSON; star families default to their Frechet coordinates.
        #[arg(long)]
        coords: Option<PathBuf>,
        #[arg(long, value_parser = parse_q, default_value = "1/10")]
        #[serde(with = "rational::serde_q")]
        epsilon: Q,
        #[arg(long, default_value_t = 2)]
        max_lamps: usize,
    },
    /// Frechet coordinates of the star with `n` arms of length `k`.
    FrechetStar {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Hamming cube inside the lamplighter of an inefficient space.
    Hamming {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long = "K", value_parser = parse_q)]
        #[serde(rename = "K", with = "rational::serde_q")]
        k_bound: Q,
        #[arg(long, default_value_t = 6)]
        max_dim: usize,
        #[arg(long, default_value_t = 2000)]
        samples: u64,
    },
    /// Weak embedding of a line space from interval covers.
    NagataWeak {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, value_parser = parse_q, value_delimiter = ',', default_value = "1,2,4,8")]
        #[serde(with = "rational::serde_q_vec")]
        scales: Vec<Q>,
    },
    /// Distortion of the identity between two spaces on the same points.
    CheckDistortion {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_parser = parse_q)]
        #[serde(with = "rational::serde_q_opt")]
        bound: Option<Q>,
    },
    /// Markov-type ratios of the lazy random walk on the unit-distance graph.
    Markov {
        #[command(flatten)]
        #[serde(flatten)]
        space: SpaceArgs,
        #[arg(long, value_parser = parse_q, default_value = "0")]
        #[serde(with = "rational::serde_q")]
        laziness: Q,
        #[arg(long, value_parser = parse_q, default_value = "2")]
        #[serde(with = "rational::serde_q")]
        p: Q,
        #[arg(long, default_value_t = 16)]
        t_max: u64,
        #[arg(long, value_enum, default_value_t = MarkovArg::Auto)]
        mode: MarkovArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

/// What one run produced: the report body, an optional CSV rendering and
/// whether every verified bound held.
pub struct Outcome {
    pub report: serde_json::Value,
    pub csv: Option<String>,
    pub passed: bool,
}

#[derive(Serialize)]
struct Envelope<'a> {
    config: &'a Cli,
    report: &'a serde_json::Value,
    passed: bool,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value.trim().parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
        if threads == 0 {
            return Err(CliError::Usage(format!("{THREADS_ENV} must be positive")));
        }
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| CliError::failed("thread pool", e))
}

/// Executes a parsed command and writes its report; returns 0 or 1.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    if cli.common.cap_targets == 0 || cli.common.cap_n == 0 {
        return Err(CliError::Usage("caps must be positive".into()));
    }
    let outcome = thread_pool()?.install(|| commands::dispatch(cli))?;
    let text = match cli.common.format {
        Format::Json => {
            let envelope = Envelope { config: cli, report: &outcome.report, passed: outcome.passed };
            let mut text = serde_json::to_string_pretty(&envelope).map_err(|e| CliError::failed("serializing report", e))?;
            text.push('\n');
            text
        }
        Format::Csv => {
            let Some(csv) = &outcome.csv else {
                return Err(CliError::Usage("this command has no CSV rendering; use --format json".into()));
            };
            let config = serde_json::to_string(cli).map_err(|e| CliError::failed("serializing config", e))?;
            format!("# config: {config}\n# passed: {}\n{csv}", outcome.passed)
        }
    };
    match &cli.common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::failed(&format!("writing {}", path.display()), e))?,
        None => print!("{text}"),
    }
    Ok(if outcome.passed { 0 } else { 1 })
}
