//! Command-line driver: exact witness evaluation, benchmark tables,
//! protocol simulation with finite-size certification, and sample-size
//! planning.
//!
//! Exit codes: `0` success, `1` a golden check failed, `2` bad input.

pub mod commands;
pub mod manifest;
pub mod ranges;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use redmoment::{DensityMatrix, Execution, FamilyParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GOLDEN: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] redmoment::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Core(e) => e.reason(),
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "redmoment", version, about = "Reduction-moment entanglement witness toolkit")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact invariants, moment matrix and witness of a state.
    Witness(WitnessArgs),
    /// Reproduce the benchmark tables as CSV.
    Benchmark(BenchmarkArgs),
    /// Simulate the randomized-measurement protocol and certify.
    Simulate(SimulateArgs),
    /// Shots needed for a given tolerance and failure probability.
    Plan(PlanArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct StateSource {
    /// JSON state file `{d_a, d_b, re, im}`.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Family spec, e.g. `mes:d=2`, `iso:d=3,p=0.5`, `biased:x=0.3,p=0.7`,
    /// `mixed:d=2`, `product:da=2,db=3`.
    #[arg(long)]
    pub family: Option<String>,
}

impl StateSource {
    pub fn family(spec: &str) -> Self {
        Self { state: None, family: Some(spec.to_string()) }
    }

    pub fn resolve(&self) -> CliResult<(FamilyParams, DensityMatrix)> {
        let params = match (&self.state, &self.family) {
            (Some(path), None) => FamilyParams::Custom(Box::new(DensityMatrix::load(path)?)),
            (None, Some(spec)) => spec.parse::<FamilyParams>()?,
            _ => return Err(CliError::Input("give exactly one of --state or --family".into())),
        };
        let rho = redmoment::make_state(&params)?;
        Ok((params, rho))
    }

    pub fn describe(&self) -> String {
        match (&self.state, &self.family) {
            (Some(p), _) => format!("file:{}", p.display()),
            (_, Some(f)) => f.clone(),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Also write the JSON report here (with a manifest next to it).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Mes,
    Isotropic,
    Biased,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    pub suite: Suite,
    /// Dimensions: `2..8`, `3` or `2,4,8`.
    #[arg(long)]
    pub d: Option<String>,
    /// Bias values: `0.1..0.9` (step 0.1), `0.1..0.9:0.05` or `0.3,0.5`.
    #[arg(long)]
    pub x: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[arg(long)]
    pub epsilon: f64,
    /// Failure probability; the budget is planned from it.
    #[arg(long, conflicts_with_all = ["nu", "ns"], required_unless_present = "nu")]
    pub delta: Option<f64>,
    /// Explicit number of settings instead of a planned budget.
    #[arg(long, requires = "ns")]
    pub nu: Option<u64>,
    /// Shots per setting with `--nu`.
    #[arg(long, requires = "nu")]
    pub ns: Option<usize>,
    /// Output directory for `report.json`, `records.jsonl` and `manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
}

/// Settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub exec: Execution,
    pub cache_dir: Option<PathBuf>,
}

impl Context {
    pub fn new(seed: u64) -> Self {
        Self { seed, exec: default_exec(), cache_dir: redmoment::inversion::cache_dir_from_env() }
    }
}

fn default_exec() -> Execution {
    if cfg!(feature = "parallel") {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// A finished command: human text, JSON value and golden-check status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub text: String,
    pub json: serde_json::Value,
    pub golden_ok: bool,
}

fn dispatch(cli: &Cli, ctx: &Context) -> CliResult<Outcome> {
    match &cli.command {
        Command::Witness(a) => commands::witness(a, ctx),
        Command::Benchmark(a) => commands::benchmark(a, ctx),
        Command::Simulate(a) => commands::simulate(a, ctx).map(|r| r.outcome),
        Command::Plan(a) => commands::plan(a),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if threads == Some(0) {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    Ok(f())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let ctx = Context::new(cli.seed);
    let result = with_threads(cli.threads, || dispatch(&cli, &ctx)).and_then(|r| r);
    match result {
        Ok(outcome) => {
            let _ = if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&outcome.json).unwrap_or_default())
            } else {
                write!(out, "{}", outcome.text)
            };
            if outcome.golden_ok {
                EXIT_OK
            } else {
                let _ = writeln!(err, "golden check failed");
                EXIT_GOLDEN
            }
        }
        Err(e) => {
            if cli.json {
                let v = serde_json::json!({ "error": e.reason(), "message": e.to_string() });
                let _ = writeln!(out, "{v}");
            }
            let _ = writeln!(err, "error ({}): {e}", e.reason());
            EXIT_INPUT
        }
    }
}
