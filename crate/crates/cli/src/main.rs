//! `riskctl`: reproducible market-risk analyses from CSV return series.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "riskctl", version, about = "VaR, backtesting, Monte Carlo and connectedness from CSV data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// QQ points of raw returns or GARCH standardized residuals.
    Qq(QqArgs),
    /// Rolling one-day VaR table.
    Var(VarArgs),
    /// Breach indicators and coverage tests for one VaR method.
    Backtest(BacktestArgs),
    /// Multi-day VaR/ES term structure by GARCH Monte Carlo.
    Mc(McArgs),
    /// GFEVD connectedness table from a multi-column CSV.
    Connectedness(ConnectednessArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV file.
    pub input: PathBuf,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    /// Value column; defaults to `return`, or `price` with --prices.
    #[arg(long)]
    pub value_column: Option<String>,
    /// Treat the value column as prices and convert to log returns.
    #[arg(long)]
    pub prices: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["mean_match", "garch"]))]
pub struct QqArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Compare returns with a normal of the same mean and standard deviation.
    #[arg(long)]
    pub mean_match: bool,
    /// Compare fitted standardized residuals with N(0, 1).
    #[arg(long)]
    pub garch: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Hs,
    GarchN,
    Fhs,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SingleMethodArg {
    Hs,
    GarchN,
    Fhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnovationArg {
    Normal,
    Fhs,
}

#[derive(Debug, Args)]
pub struct VarArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, default_value_t = risk_core::var_engine::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "fhs")]
    pub method: SingleMethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, default_value_t = risk_core::var_engine::DEFAULT_WINDOW)]
    pub window: usize,
    /// Coverage report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Breach indicator CSV; defaults to `<out stem>.breaches.csv`.
    #[arg(long)]
    pub breaches: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "normal")]
    pub innovation: InnovationArg,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, default_value_t = 5)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
    /// Mandatory RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Term structure CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON copy of the term structure.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConnectednessArgs {
    /// Multi-column CSV: a date column plus one column per variable.
    pub input: PathBuf,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = risk_core::connectedness::DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Normalized GFEVD table CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Edge list JSON; defaults to `<out stem>.edges.json`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("RISK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("RISK_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Qq(a) => commands::qq(&a),
        Command::Var(a) => commands::var(&a),
        Command::Backtest(a) => commands::backtest(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::Connectedness(a) => commands::connectedness(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskctl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
