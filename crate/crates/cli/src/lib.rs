//! Command-line front end: every check and experiment as a subcommand that
//! writes a [`RunRecord`] and exits 1 when the check fails.

mod commands;
pub mod record;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use record::{emit, format_float, Format, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mostinfo_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mostinfo",
    version,
    about = "Checks and experiments for the most informative Boolean function problem"
)]
pub struct Cli {
    /// Output format of the run record.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the record here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boolean cube checks.
    #[command(subcommand)]
    Boolean(BooleanCmd),
    /// Discrete sphere checks.
    #[command(subcommand)]
    Sphere(SphereCmd),
    /// Gaussian space checks.
    #[command(subcommand)]
    Gauss(GaussCmd),
}

#[derive(Debug, Subcommand)]
pub enum BooleanCmd {
    /// Exhaustive scan of all functions on n inputs.
    Verify(VerifyArgs),
    /// Mutual information of a truth-table file.
    Mi(MiArgs),
    /// Mutual information of a structured family member.
    Family(FamilyArgs),
    /// Hamming(15, 11) decoder against the per-bit bound.
    PerfectCode(AlphaArgs),
    /// Hamming ball versus AND_k at equal mean.
    LexFailure(LexArgs),
    /// Small-noise expansion on random functions.
    Taylor(TaylorArgs),
}

#[derive(Debug, Subcommand)]
pub enum SphereCmd {
    /// Two-point polarization inequality on the circle grid.
    PolarizeCheck(PolarizeArgs),
    /// Rearrangement dominance and iterated polarization.
    Rearrange(RearrangeArgs),
    /// Monte Carlo mass of the Poisson kernel.
    Mc(SphereMcArgs),
}

#[derive(Debug, Subcommand)]
pub enum GaussCmd {
    /// Halfspace versus a set of equal measure.
    HalfspaceVs(HalfspaceArgs),
    /// Convergence of the finite-N kernel to the Mehler kernel.
    KernelLimit(KernelLimitArgs),
    /// Factorization identity and A bound.
    FactorCheck(FactorArgs),
}

#[derive(Debug, Args)]
pub struct AlphaArgs {
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    /// Restrict to functions with this many ones.
    #[arg(long)]
    pub ones: Option<usize>,
    /// Write `function_index,mi` rows here (n <= 3).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Checkpoint file for the resumable n = 5 scan.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Stop the n = 5 scan after this many blocks.
    #[arg(long)]
    pub max_blocks: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[arg(long)]
    pub tt: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// The file holds this many tables, one per output bit.
    #[arg(long)]
    pub multi: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// `dictator:I`, `and:K`, `lex:COUNT`, `ball:ONES` or `majority`.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct LexArgs {
    /// Comma-separated list.
    #[arg(long)]
    pub k: String,
    /// Comma-separated list.
    #[arg(long)]
    pub n: String,
    /// Comma-separated list.
    #[arg(long)]
    pub alpha: String,
    /// Write every configuration here as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TaylorArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct PolarizeArgs {
    #[arg(long)]
    pub grid: usize,
    #[arg(long)]
    pub rho: f64,
    /// `neg-entropy`, `square` or `abs-power:P`.
    #[arg(long)]
    pub psi: String,
    #[arg(long)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct RearrangeArgs {
    #[arg(long)]
    pub grid: usize,
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value = "neg-entropy")]
    pub psi: String,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Write the `step,J,l1_distance` trace here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SphereMcArgs {
    #[arg(long)]
    pub dim: usize,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    pub points: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
}

#[derive(Debug, Args)]
pub struct HalfspaceArgs {
    /// Target measure; a random interval union is drawn when `--spec` is absent.
    #[arg(long)]
    pub measure: Option<f64>,
    #[arg(long)]
    pub rho: f64,
    /// `{"halfspace": T}` or `{"intervals": [[A, B], ...]}`; endpoints may be
    /// `"inf"` or `"-inf"`.
    #[arg(long)]
    pub spec: Option<String>,
}

#[derive(Debug, Args)]
pub struct KernelLimitArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long)]
    pub rho: f64,
    /// Comma-separated list of ambient dimensions.
    #[arg(long = "bigN")]
    pub big_n: String,
    /// Comma-separated coordinates of y.
    #[arg(long)]
    pub y: Option<String>,
    /// Comma-separated coordinates of z.
    #[arg(long)]
    pub z: Option<String>,
    /// Write `N,value,reference,abs_err,rel_err` rows here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactorArgs {
    #[arg(long = "bigN")]
    pub big_n: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 100_000)]
    pub bound_samples: usize,
}

/// Parses `argv`, runs the command, writes its record and returns the exit
/// code: 0 on success, 1 when the check fails, 2 on usage or input errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(record) => match record.pass {
            Some(false) => 1,
            _ => 0,
        },
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs a parsed command and writes its record.
pub fn execute(cli: &Cli) -> CliResult<RunRecord> {
    let start = Instant::now();
    let mut record = commands::dispatch(cli)?;
    record.wall_time_ms = start.elapsed().as_millis() as u64;
    let text = emit(&record, cli.format);
    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(record)
}
