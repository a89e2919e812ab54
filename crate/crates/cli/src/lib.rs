//! `spchoice`: simulate, solve, classify, run ensembles, verify, plot.

pub mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spatial_choice::harness::acceptance::{self, Profile, DEFAULT_SEED};
use spatial_choice::harness::{self, aggregate, run_replicas, EnsembleSummary, ReplicaOptions, ReplicaSummary};
use spatial_choice::io::{series_to_csv, write_json, CsvObserver, RunSummary};
use spatial_choice::model::run;
use spatial_choice::plot::{render_svg, PlotKind};
use spatial_choice::theory::{self, TheoryResult, DEFAULT_K_MAX};
use spatial_choice::{IoError, ModelParams};
use thiserror::Error;

use config::{ConfigFile, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} acceptance criteria failed")]
    AcceptanceFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::AcceptanceFailed(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Csv { .. } => CliError::Usage(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spchoice", version, about = "Spatial preferential attachment with a choice-based edge step")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one simulation; writes series.csv and summary.json
    Simulate(ConfigFile),
    /// Solve the fixed-point system for the limits x_k*
    Solve {
        #[command(flatten)]
        config: ConfigFile,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
    },
    /// Report the regime and its constants
    Classify(ConfigFile),
    /// Run an ensemble; writes replica_<r>.csv and aggregate.json
    Replicas(ConfigFile),
    /// Run the limit experiments and report pass/fail per criterion
    Verify {
        #[arg(long, value_enum, default_value_t = ProfileArg::Full)]
        profile: ProfileArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write verify.json into this directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Render a series CSV as SVG
    Plot {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, value_name = "SVG")]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotMode::Ratio)]
        mode: PlotMode,
        /// Model parameters used for the reference lines
        #[command(flatten)]
        config: ConfigFile,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProfileArg {
    Full,
    Quick,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PlotMode {
    /// M_k(n)/n against log n with x_k* references
    Ratio,
    /// log M_1 against log n with a slope a + d alpha reference
    Loglog,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("spchoice: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(cfg) => simulate(&cfg.resolve()?),
        Command::Solve { config, k_max } => {
            let cfg = config.resolve()?;
            if k_max == 0 {
                return Err(CliError::Usage("--k-max must be at least 1".into()));
            }
            let res = theory::solve_fixed_point(&cfg.params, k_max).map_err(|e| CliError::Usage(e.to_string()))?;
            print_json(&res)
        }
        Command::Classify(cfg) => {
            let cfg = cfg.resolve()?;
            if theory::is_delicate(&cfg.params) {
                eprintln!(
                    "warning: a + d alpha = {} is within {:e} of 1; the regime classification is numerically delicate",
                    cfg.params.exponent(),
                    theory::DELICATE_TOL
                );
            }
            print_json(&classify(&cfg.params)?)
        }
        Command::Replicas(cfg) => replicas(&cfg.resolve()?),
        Command::Verify { profile, seed, jobs, out } => verify(profile, seed, jobs, out),
        Command::Plot { input, output, mode, config } => plot(&input, &output, mode, &config.resolve()?),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn classify(params: &ModelParams) -> Result<TheoryResult, CliError> {
    theory::classify_regime(params).map_err(|e| CliError::Usage(e.to_string()))
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

#[derive(Serialize)]
struct Timing {
    wall_clock_seconds: f64,
}

fn write_timing(dir: &Path, started: Instant) -> Result<(), CliError> {
    let timing = Timing {
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(write_json(&dir.join("timing.json"), &timing)?)
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    create_out_dir(&cfg.out)?;
    let theory = classify(&cfg.params)?;
    let csv_path = cfg.out.join("series.csv");
    let file = File::create(&csv_path).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    let mut csv = CsvObserver::new(BufWriter::new(file), cfg.params.track_k);
    let series = run(&cfg.params, &mut [&mut csv])?;
    csv.into_inner().flush()?;

    let window = harness::default_exponent_window(cfg.params.steps);
    let last = series.last().expect("initial checkpoint").clone();
    let final_n = last.n.max(1);
    let replica = ReplicaSummary {
        replica_id: 0,
        final_n: last.n,
        final_top: last.top.clone(),
        exponent: harness::estimate_exponent(&series, window).ok(),
        ratios: (1..=cfg.params.track_k).map(|k| harness::RatioKind::MkOverN(k).apply(final_n, &last.top)).collect(),
        m1_log_n_over_n: harness::RatioKind::M1LogNOverN.apply(final_n, &last.top),
        drift: Vec::new(),
    };
    let summary = RunSummary::from_replica(&cfg.params, theory, &replica, &series, window);
    write_json(&cfg.out.join("summary.json"), &summary)?;
    write_timing(&cfg.out, started)?;
    println!(
        "n = {}, E = {}, top = {:?}; wrote {}",
        summary.final_n,
        summary.final_e,
        summary.final_top,
        cfg.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AggregateReport<'a> {
    params: &'a ModelParams,
    seed: u64,
    theory: TheoryResult,
    replicas: Vec<&'a ReplicaSummary>,
    ensemble: EnsembleSummary,
}

fn replicas(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    create_out_dir(&cfg.out)?;
    let options = ReplicaOptions {
        exponent_window: None,
        drift_ranks: 1,
    };
    let runs = run_replicas(&cfg.params, cfg.replicas, cfg.jobs, &options)?;
    for r in &runs {
        let path = cfg.out.join(format!("replica_{}.csv", r.summary.replica_id));
        fs::write(&path, series_to_csv(&r.series)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let report = AggregateReport {
        params: &cfg.params,
        seed: cfg.params.seed,
        theory: classify(&cfg.params)?,
        replicas: runs.iter().map(|r| &r.summary).collect(),
        ensemble: aggregate(&runs),
    };
    write_json(&cfg.out.join("aggregate.json"), &report)?;
    write_timing(&cfg.out, started)?;
    let ratios: Vec<String> = report.ensemble.ratios.iter().map(|m| format!("{:.4}", m.mean)).collect();
    println!(
        "{} replicas; mean M_k/n = [{}], mean M_1 ln n/n = {:.4}; wrote {}",
        runs.len(),
        ratios.join(", "),
        report.ensemble.m1_log_n_over_n.mean,
        cfg.out.display()
    );
    Ok(())
}

fn verify(profile: ProfileArg, seed: u64, jobs: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    let profile = match profile {
        ProfileArg::Full => Profile::Full,
        ProfileArg::Quick => Profile::Quick,
    };
    let reports = acceptance::verify(profile, seed, jobs.max(1), |r| println!("{r}"))?;
    if let Some(dir) = out {
        create_out_dir(&dir)?;
        write_json(&dir.join("verify.json"), &reports)?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        Err(CliError::AcceptanceFailed(failed))
    } else {
        Ok(())
    }
}

fn plot(input: &Path, output: &Path, mode: PlotMode, cfg: &RunConfig) -> Result<(), CliError> {
    let series = spatial_choice::io::read_series_csv(input)?;
    let p = &cfg.params;
    let (kind, reference) = match mode {
        PlotMode::Ratio => {
            let mut x = classify(p)?.x_star;
            x.truncate(series.track_k);
            (PlotKind::Ratio, x)
        }
        PlotMode::Loglog => (PlotKind::LogLog, vec![p.exponent().min(1.0)]),
    };
    let title = format!("a = {}, alpha = {}, d = {}, m ~ {:?}", p.a, p.alpha, p.d, p.m_dist);
    fs::write(output, render_svg(&series, kind, &reference, &title)).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    Ok(())
}
