use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsqbench_core::solvers::SolverKind;

#[derive(Debug, Parser)]
#[command(
    name = "lsqbench",
    version,
    about = "Compare QR, Gaussian elimination and LU regression solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn raw sales and rate tables into labeled town-year groups.
    Preprocess(PreprocessArgs),
    /// Fit the selected solvers on a preprocessed table and write a JSON report.
    Run(RunArgs),
    /// Fit all solvers and write metrics, residual and coefficient tables.
    Compare(CompareArgs),
    /// Generate a synthetic preprocessed table from a planted linear model.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub sales: PathBuf,
    #[arg(long)]
    pub rates: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500_000.0)]
    pub investment: f64,
    #[arg(long, default_value_t = 30)]
    pub term_years: u32,
    #[arg(long, default_value_t = 12)]
    pub payments_per_year: u32,
    /// Header renames applied to both inputs, e.g. `List Year=Year,Name=Town`.
    #[arg(long)]
    pub column_map: Option<String>,
}

/// Options shared by `run` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Preprocessed CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// `all` or a comma-separated subset of `qr,ge,lu`.
    #[arg(long, default_value = "all")]
    pub solver: String,
    #[arg(long, default_value_t = 0.25)]
    pub test_size: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub reg_factor: f64,
    /// Time each solver this many times and report the median.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetMode {
    /// Buy label: planted value thresholded at 0.5.
    Label,
    /// Also emit the unthresholded planted value in a trailing `Target` column.
    Continuous,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub towns: usize,
    /// Inclusive year range, `START..END`.
    #[arg(long)]
    pub years: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Standard deviation of the Gaussian noise added to the planted value.
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    /// Where to write the planted coefficients (`name,value` CSV).
    #[arg(long)]
    pub planted_coefs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetMode::Label)]
    pub target: TargetMode,
}

/// Parses `all` or a comma-separated solver list into canonical order.
pub fn parse_solvers(spec: &str) -> Result<Vec<SolverKind>, String> {
    let spec = spec.trim();
    if spec == "all" {
        return Ok(SolverKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind: SolverKind = name
            .parse()
            .map_err(|e: lsqbench_core::Error| e.to_string())?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err("no solver selected".to_string());
    }
    out.sort();
    Ok(out)
}

/// Parses `START..END` (inclusive).
pub fn parse_year_range(spec: &str) -> Result<(i32, i32), String> {
    let (a, b) = spec
        .split_once("..")
        .ok_or_else(|| format!("expected START..END, got {spec:?}"))?;
    let a: i32 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad start year in {spec:?}"))?;
    let b: i32 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad end year in {spec:?}"))?;
    if a > b || !(1900..=2100).contains(&a) || !(1900..=2100).contains(&b) {
        return Err(format!(
            "year range {spec:?} must be increasing within 1900..2100"
        ));
    }
    Ok((a, b))
}
