//! `dtoda`: weld circle homeomorphisms and compute chart coordinates, Grunsky
//! coefficients, tau functions and verification reports from JSON configs.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 numeric failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtoda::Chart;
use serde::Serialize;

use config::{Overrides, RunConfig};
use output::Sink;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Numeric(#[from] dtoda::Error),
}

#[derive(Parser)]
#[command(name = "dtoda", version, about = "Conformal welding and dispersionless Toda computations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Weld a circle homeomorphism into a pair of univalent maps.
    Weld(Common),
    /// Run a verification suite and write its report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
    /// Coordinates (t_n, v_n) of a pair in one chart.
    Chart(Common),
    /// Grunsky coefficients of a pair.
    Grunsky(Common),
    /// log tau and its gradient, optionally with a finite-difference Hessian.
    Tau(Common),
    /// Harmonic moments of the curve g(S^1).
    Moments(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    config: PathBuf,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_enum)]
    chart: Option<ChartArg>,
    /// Output JSON path; CSV tables go next to it. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartArg {
    Inverse,
    Direct,
    Extended,
    Wz,
}

impl From<ChartArg> for Chart {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Inverse => Chart::Inverse,
            ChartArg::Direct => Chart::Direct,
            ChartArg::Extended => Chart::Extended,
            ChartArg::Wz => Chart::Wz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Hirota,
    Lax,
    String,
    Rh,
    Symmetry,
    Gradient,
}

impl Common {
    fn load(self, suite: Option<Suite>) -> Result<RunConfig, CliError> {
        let over = Overrides {
            order: self.order,
            grid: self.grid,
            tol: self.tol,
            h: self.h,
            chart: self.chart.map(Chart::from),
            suite: suite.map(|s| format!("{s:?}").to_lowercase()),
            out: self.out,
        };
        RunConfig::load(&self.config, over)
    }
}

fn set_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DTODA_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("DTODA_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    message: String,
}

enum Task {
    Weld,
    Verify,
    Chart,
    Grunsky,
    Tau,
    Moments,
}

/// Ok(false) means the run finished but a verification check failed.
fn run(cmd: Cmd) -> Result<bool, CliError> {
    set_threads()?;
    let (task, cfg) = match cmd {
        Cmd::Verify { common, suite } => (Task::Verify, common.load(suite)?),
        Cmd::Weld(c) => (Task::Weld, c.load(None)?),
        Cmd::Chart(c) => (Task::Chart, c.load(None)?),
        Cmd::Grunsky(c) => (Task::Grunsky, c.load(None)?),
        Cmd::Tau(c) => (Task::Tau, c.load(None)?),
        Cmd::Moments(c) => (Task::Moments, c.load(None)?),
    };
    let done = match task {
        Task::Verify => {
            let name = cfg.suite.clone().ok_or_else(|| CliError::Usage("verify needs --suite".into()))?;
            let suite = Suite::from_str(&name, true).map_err(|_| CliError::Usage(format!("unknown suite {name:?}")))?;
            commands::verify(&cfg, suite)
        }
        Task::Weld => commands::weld(&cfg).map(|_| true),
        Task::Chart => commands::chart(&cfg).map(|_| true),
        Task::Grunsky => commands::grunsky_cmd(&cfg).map(|_| true),
        Task::Tau => commands::tau(&cfg).map(|_| true),
        Task::Moments => commands::moments(&cfg).map(|_| true),
    };
    if let Err(CliError::Numeric(e)) = &done {
        Sink::new(cfg.out.clone()).json(&ErrorJson { error: e.kind(), message: e.to_string() })?;
    }
    done
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see the report");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
