//! Command-line front end: reads channel descriptions, runs the library
//! routines and writes JSON or CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use iccap_core::optimizer::{pgic_allocate, region_boundary, sum_capacity, interference_sweep, OptConfig, SweepTemplate};
use iccap_core::{classify, CovariancePair, Error as CoreError, RegimeLabel};
use serde::Serialize;

pub mod spec;

pub use spec::{ChannelSpec, SweepSpec};

pub const SEED_ENV: &str = "ICCAP_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed spec: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    /// 1 for unreadable input, 2 for invalid channels and numerical
    /// failures, 3 for a channel outside the command's regime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Read { .. } | Self::Parse(_) => 1,
            Self::Core(CoreError::WrongRegime { .. } | CoreError::NotParallel) => 3,
            Self::Core(_) | Self::Write(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "iccap", version, about = "Sum capacity of two-user MIMO Gaussian interference channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Starting points per optimization and per regime search.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Seed for randomized starts; ICCAP_SEED takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the interference regime with its certificates.
    Classify {
        spec: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Print the sum capacity and an achieving covariance pair.
    Sumrate {
        spec: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Report rates in bits instead of nats.
        #[arg(long)]
        bits: bool,
        /// Include the objective trace of the best run.
        #[arg(long)]
        trace: bool,
    },
    /// Print boundary points of the capacity region as CSV.
    Region {
        spec: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
        points: u64,
    },
    /// Print the power allocation of a parallel channel.
    Pgic {
        spec: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        bits: bool,
    },
    /// Print sum capacity against the interference scale as CSV.
    Sweep {
        template: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        a_from: Option<f64>,
        #[arg(long)]
        a_to: Option<f64>,
        #[arg(long)]
        a_steps: Option<usize>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn config(run: &RunFlags, env_seed: Option<&str>) -> Result<OptConfig, CliError> {
    let seed = match env_seed {
        Some(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {s:?}")))?,
        None => run.seed,
    };
    let mut cfg = OptConfig::default().with_seed(seed);
    if let Some(r) = run.restarts {
        if r == 0 {
            return Err(CliError::Usage("--restarts must be at least 1".into()));
        }
        cfg.restarts = r;
        cfg.search.restarts = r;
    }
    Ok(cfg)
}

fn unit(bits: bool) -> (&'static str, f64) {
    if bits {
        ("bits", std::f64::consts::LN_2)
    } else {
        ("nats", 1.0)
    }
}

fn json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Write(e.into()))?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct SumRateReport<'a> {
    regime: Option<RegimeLabel>,
    unit: &'a str,
    sum_rate: f64,
    capacity_certified: bool,
    concave: bool,
    achieving: CovariancePair,
    multistart_spread: f64,
    restart_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective_trace: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PgicReport<'a> {
    unit: &'a str,
    sum_rate: f64,
    p1_alloc: Vec<f64>,
    p2_alloc: Vec<f64>,
    sub_rates: Vec<f64>,
    per_sub_conditions: Vec<bool>,
    multipliers: (f64, f64),
    kkt_residual: f64,
}

pub fn run(cli: &Cli, env_seed: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Classify { spec, run } => {
            let cfg = config(run, env_seed)?;
            let ch = ChannelSpec::parse(&read(spec)?)?.channel()?;
            json(out, &classify(&ch, &cfg.search)?)
        }
        Command::Sumrate { spec, run, bits, trace } => {
            let cfg = config(run, env_seed)?;
            let ch = ChannelSpec::parse(&read(spec)?)?.channel()?;
            let r = sum_capacity(&ch, &cfg)?;
            let (unit, per) = unit(*bits);
            let scale = |v: &[f64]| v.iter().map(|x| x / per).collect::<Vec<_>>();
            json(
                out,
                &SumRateReport {
                    regime: r.regime,
                    unit,
                    sum_rate: r.sum_rate_nats / per,
                    capacity_certified: r.capacity_certified,
                    concave: r.concave,
                    multistart_spread: r.multistart_spread / per,
                    restart_values: scale(&r.restart_values),
                    objective_trace: trace.then(|| scale(&r.objective_trace)),
                    achieving: r.achieving,
                },
            )
        }
        Command::Region { spec, run, points } => {
            let cfg = config(run, env_seed)?;
            let ch = ChannelSpec::parse(&read(spec)?)?.channel()?;
            let b = region_boundary(&ch, *points as usize, &cfg)?;
            writeln!(out, "r1_nats,r2_nats,mu1")?;
            for ((r1, r2), (mu1, _)) in b.points.iter().zip(&b.weights) {
                writeln!(out, "{r1},{r2},{mu1}")?;
            }
            Ok(())
        }
        Command::Pgic { spec, run, bits } => {
            let cfg = config(run, env_seed)?;
            let ch = ChannelSpec::parse(&read(spec)?)?.channel()?;
            let r = pgic_allocate(&ch, &cfg)?;
            let (unit, per) = unit(*bits);
            json(
                out,
                &PgicReport {
                    unit,
                    sum_rate: r.sum_rate / per,
                    sub_rates: r.sub_rates.iter().map(|x| x / per).collect(),
                    multipliers: (r.multipliers.0 / per, r.multipliers.1 / per),
                    kkt_residual: r.kkt_residual / per,
                    p1_alloc: r.p1_alloc,
                    p2_alloc: r.p2_alloc,
                    per_sub_conditions: r.per_sub_conditions,
                },
            )
        }
        Command::Sweep { template, run, a_from, a_to, a_steps, lambda1, lambda2, rho } => {
            let cfg = config(run, env_seed)?;
            let mut spec = SweepSpec::parse(&read(template)?)?;
            let s = &mut spec.sweep;
            s.a_from = a_from.unwrap_or(s.a_from);
            s.a_to = a_to.unwrap_or(s.a_to);
            s.a_steps = a_steps.unwrap_or(s.a_steps);
            s.lambda1 = lambda1.unwrap_or(s.lambda1);
            s.lambda2 = lambda2.unwrap_or(s.lambda2);
            s.rho = rho.unwrap_or(s.rho);
            let tpl = SweepTemplate { lambda1: s.lambda1, lambda2: s.lambda2, rho: s.rho, p1: spec.p1, p2: spec.p2 };
            let grid = spec.grid()?;
            let rows = interference_sweep(&tpl, &grid, &cfg)?;
            writeln!(out, "a,regime,c_nats")?;
            for r in rows {
                let c = r.c_nats.map(|c| c.to_string()).unwrap_or_default();
                writeln!(out, "{},{},{c}", r.a, r.regime)?;
            }
            Ok(())
        }
    }
}
