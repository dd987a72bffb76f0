use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{read_config_file, Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::executor::RayonExecutor;
use crate::experiments::run_table;
use crate::manifest::RunManifest;
use crate::selftest::run_selftest;

#[derive(Debug, Parser)]
#[command(name = "riplab", version, about = "Seeded experiments for rank-one unit-modulus matrix sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Realizations of ||A(X)||^2 over fresh ensembles.
    Concentration(Flags),
    /// Exact all-ones moments E_t for t = 0..tmax.
    Moments(Flags),
    /// Monte Carlo moments of random matrices against the all-ones majorant.
    Dominance(Flags),
    /// Optimized Chernoff bounds next to empirical tail frequencies.
    Tailbound(Flags),
    /// Recovery error over a grid of measurement counts.
    Sweep(Flags),
    /// Quick oracle suites.
    Selftest(Flags),
}

/// Every value is kept as text so flags and config files share one parser.
#[derive(Debug, Args)]
struct Flags {
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    /// Counts and start:stop:step ranges, comma separated.
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long = "r")]
    r: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// nuclear, altmin, gd (comma separated).
    #[arg(long)]
    solver: Option<String>,
    /// unitmod, gaussian (comma separated).
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long = "noise-std")]
    noise_std: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "step-size")]
    step_size: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    /// Flat key=value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        [
            ("M", &self.m),
            ("N", &self.n),
            ("K", &self.k),
            ("r", &self.r),
            ("trials", &self.trials),
            ("samples", &self.samples),
            ("tmax", &self.tmax),
            ("alpha", &self.alpha),
            ("solver", &self.solver),
            ("ensemble", &self.ensemble),
            ("seed", &self.seed),
            ("out", &self.out),
            ("workers", &self.workers),
            ("noise_std", &self.noise_std),
            ("max_iters", &self.max_iters),
            ("tol", &self.tol),
            ("step_size", &self.step_size),
            ("rho", &self.rho),
            ("ridge", &self.ridge),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

/// Parsed command line, or text clap asked to print (help, version).
#[derive(Debug)]
pub enum Parsed {
    Run(ExperimentConfig),
    Display(String),
}

pub fn parse_config<I, T>(argv: I) -> Result<Parsed>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => return Ok(Parsed::Display(e.to_string())),
        Err(e) => return Err(HarnessError::Usage(e.to_string())),
    };
    let (experiment, flags) = match cli.command {
        Command::Concentration(f) => (Experiment::Concentration, f),
        Command::Moments(f) => (Experiment::Moments, f),
        Command::Dominance(f) => (Experiment::Dominance, f),
        Command::Tailbound(f) => (Experiment::Tailbound, f),
        Command::Sweep(f) => (Experiment::Sweep, f),
        Command::Selftest(f) => (Experiment::Selftest, f),
    };
    let file_pairs = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => Vec::new(),
    };
    Ok(Parsed::Run(ExperimentConfig::resolve(experiment, &file_pairs, &flags.pairs())?))
}

/// Runs a resolved config, writing the CSV and its manifest. Returns the exit code.
pub fn run(cfg: &ExperimentConfig) -> Result<i32> {
    let exec = RayonExecutor::new(cfg.workers)?;
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    if cfg.experiment == Experiment::Selftest {
        let report = run_selftest(cfg.seed, &exec);
        let text = report.render();
        print!("{text}");
        let failures: Vec<String> = report.suites.iter().filter(|s| !s.passed).map(|s| format!("{}: {}", s.name, s.detail)).collect();
        if let Some(out) = &cfg.out {
            fs::write(out, &text).map_err(|e| HarnessError::io(out, e))?;
            RunManifest::new(cfg, report.suites.len(), started_unix, clock.elapsed().as_secs_f64(), failures.clone()).write_for(out)?;
        }
        return Ok(if failures.is_empty() { 0 } else { 2 });
    }
    let out = cfg.out.clone().expect("table experiments always have an output path");
    let table = run_table(cfg, &exec)?;
    table.write_csv(&out)?;
    let manifest = RunManifest::new(cfg, table.rows.len(), started_unix, clock.elapsed().as_secs_f64(), table.failures.clone());
    manifest.write_for(&out)?;
    eprintln!("wrote {} rows to {}", table.rows.len(), out.display());
    if !table.failures.is_empty() {
        eprintln!("{} failure(s); see {}", table.failures.len(), crate::manifest::manifest_path(&out).display());
        return Ok(2);
    }
    Ok(0)
}

/// Full command-line entry point.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = parse_config(argv).and_then(|parsed| match parsed {
        Parsed::Display(text) => {
            print!("{text}");
            Ok(0)
        }
        Parsed::Run(cfg) => run(&cfg),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("riplab: {e}");
            e.exit_code()
        }
    }
}
