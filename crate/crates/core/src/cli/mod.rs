//! JSON-configured commands behind the `nlamp` binary.
//!
//! Exit codes: 0 success, 1 failed checks or a rejected signal operator,
//! 2 usage or configuration error, 3 truncation or I/O trouble.

mod commands;
mod config;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{
    compare, csv_name, estimate, noise_sweep, povm_at, povm_summaries, weights_increase, write_sweep_csv,
    CompareOutput, EstimateOutput, PovmReport, PovmSummary, SweepRow,
};
pub use config::{AmplifierConfig, CommandName, PovmRoute, RunConfig, SignalConfig};
pub use verify::{run_checks, Check};

#[derive(Debug, Parser)]
#[command(name = "nlamp", version, about = "Nonlinear quantum amplifier simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suite and print a pass/fail table.
    Verify(CommonArgs),
    /// Output noise against gain, as CSV.
    NoiseSweep(CommonArgs),
    /// Effective POVM grids as CSV plus a JSON summary.
    Povm(CommonArgs),
    /// Monte Carlo estimator report as JSON.
    Estimate(CommonArgs),
    /// Nonlinear against linear number estimation, as JSON.
    Compare(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; overrides the configured count.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    fn parts(&self) -> (CommandName, &CommonArgs) {
        match self {
            Command::Verify(a) => (CommandName::Verify, a),
            Command::NoiseSweep(a) => (CommandName::NoiseSweep, a),
            Command::Povm(a) => (CommandName::Povm, a),
            Command::Estimate(a) => (CommandName::Estimate, a),
            Command::Compare(a) => (CommandName::Compare, a),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotNormal(_) | Error::NotHermitian(_) | Error::Decomposition(_) => 1,
        Error::Truncation(_) | Error::Coverage(_) | Error::Io(_) => 3,
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::GainOutOfRange(_)
        | Error::Json(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidDimension(_) => 2,
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs one command with a parsed config; returns the exit code.
pub fn execute(name: CommandName, cfg: &RunConfig, out: &Path) -> Result<i32> {
    match name {
        CommandName::Verify => {
            let checks = run_checks(cfg)?;
            let failed = checks.iter().filter(|c| !c.pass).count();
            for c in &checks {
                println!(
                    "{}  {:<58} {:>12.3e}  (bound {:.1e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound
                );
            }
            println!("{} checks, {} failed", checks.len(), failed);
            Ok(if failed == 0 { 0 } else { 1 })
        }
        CommandName::NoiseSweep => {
            let rows = noise_sweep(cfg)?;
            fs::create_dir_all(out)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            fs::write(out.join("noise_sweep.csv"), &buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(0)
        }
        CommandName::Povm => {
            let (gains, files) = povm_summaries(cfg)?;
            fs::create_dir_all(out)?;
            for (s, body) in gains.iter().zip(&files) {
                fs::write(out.join(&s.csv), body)?;
                println!(
                    "g={}: {} points, identity residual {:.3e}, min own-region weight {:.9}",
                    s.g,
                    s.points,
                    s.identity_residual,
                    s.own_region_weights.iter().copied().fold(f64::INFINITY, f64::min)
                );
            }
            let report = PovmReport {
                config: cfg.clone(),
                weights_increase_with_gain: weights_increase(&gains),
                gains,
            };
            write_json(&out.join("povm_summary.json"), &report)?;
            Ok(0)
        }
        CommandName::Estimate => {
            let reports = estimate(cfg)?;
            fs::create_dir_all(out)?;
            for r in &reports {
                println!(
                    "g={}: mean {:.6} (analytic {:.6}), variance {:.6} (analytic {:.6}), z = ({:.2}, {:.2})",
                    r.gain, r.mean, r.analytic_mean, r.variance, r.analytic_variance, r.z_scores.mean, r.z_scores.variance
                );
            }
            write_json(
                &out.join("estimate.json"),
                &EstimateOutput {
                    config: cfg.clone(),
                    reports,
                },
            )?;
            Ok(0)
        }
        CommandName::Compare => {
            let comparisons = compare(cfg)?;
            fs::create_dir_all(out)?;
            for c in &comparisons {
                println!(
                    "g={}: nonlinear {:.6}, linear {:.6}, improvement {}",
                    c.gain, c.nonlinear.variance, c.linear.variance, c.improvement
                );
            }
            write_json(
                &out.join("compare.json"),
                &CompareOutput {
                    config: cfg.clone(),
                    comparisons,
                },
            )?;
            Ok(0)
        }
    }
}

fn run_command(cmd: &Command) -> Result<i32> {
    let (name, args) = cmd.parts();
    let raw = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    raw.validate(name)?;
    let cfg = raw.resolved(name, args.seed);
    // the thread count never changes results, so the flag is not echoed into reports
    let threads = args.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(crate::error::invalid("threads", "must be positive"));
    }
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| execute(name, &cfg, &args.out))
        }
        None => execute(name, &cfg, &args.out),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
