//! Command-line front end: merges preset, configuration file and flags, runs
//! the estimator over one strike or a strike sweep and writes CSV.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a run fails.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::config::{self, MethodKind, RunConfig};
use crate::error::{config_err, Error, Result};
use crate::estimator::{estimate_with, EstimateReport, PilotMode};
use crate::payoffs::PayoffKind;
use crate::qmc::SamplingMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUN: i32 = 3;

/// Header of the result CSV; sweeps append a `strike` column.
pub const CSV_HEADER: [&str; 5] = ["component", "delta", "stderr", "method", "rejected_paths"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Adaptive,
    Loc,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Sobol,
    Pseudo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PilotArg {
    Independent,
    Reuse,
}

#[derive(Debug, Parser)]
#[command(name = "qmc-malliavin", version, about = "Multi-asset Delta estimation with Malliavin weights and randomized QMC")]
struct Cli {
    /// Configuration file (key = value sections)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration: table1..table5
    #[arg(long)]
    preset: Option<String>,
    /// Payoff: asian-fixed, asian-floating, digital or exotic
    #[arg(long)]
    payoff: Option<PayoffKind>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Localization width as a fraction of the strike (method loc)
    #[arg(long)]
    loc_delta: Option<f64>,
    /// Relative spot bump (method fd)
    #[arg(long)]
    fd_bump: Option<f64>,
    #[arg(long)]
    assets: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Points per replication
    #[arg(long)]
    points: Option<usize>,
    /// Number of independent replications
    #[arg(long)]
    reps: Option<usize>,
    /// Orthogonal transformation of the normal draws
    #[arg(long, value_enum)]
    lt: Option<OnOff>,
    #[arg(long)]
    lss_block: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Pilot sample for adaptive localization
    #[arg(long, value_enum)]
    pilot: Option<PilotArg>,
    /// Strike sweep lo:hi:step
    #[arg(long)]
    sweep: Option<String>,
    /// Result CSV path (stdout when absent)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write per-replication means to this CSV
    #[arg(long)]
    debug_replications: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.preset {
        Some(name) => config::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        cfg = cfg
            .parse_into(&text)
            .map_err(|e| config_err(format!("{}: {}", path.display(), strip_prefix(&e))))?;
    }
    if let Some(v) = cli.payoff {
        cfg.payoff = v;
    }
    if let Some(v) = cli.strike {
        cfg.strike = v;
    }
    if let Some(v) = cli.method {
        cfg.method = match v {
            MethodArg::Adaptive => MethodKind::Adaptive,
            MethodArg::Loc => MethodKind::Loc,
            MethodArg::Fd => MethodKind::Fd,
        };
    }
    if let Some(v) = cli.loc_delta {
        cfg.loc_delta = v;
    }
    if let Some(v) = cli.fd_bump {
        cfg.fd_bump = v;
    }
    if let Some(v) = cli.assets {
        cfg.assets = v;
    }
    if let Some(v) = cli.steps {
        cfg.steps = v;
    }
    if let Some(v) = cli.points {
        cfg.points = v;
    }
    if let Some(v) = cli.reps {
        cfg.replications = v;
    }
    if let Some(v) = cli.lt {
        cfg.lt = v == OnOff::On;
    }
    if let Some(v) = cli.lss_block {
        cfg.lss_block = Some(v);
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.mode {
        cfg.mode = match v {
            ModeArg::Sobol => SamplingMode::ScrambledSobol,
            ModeArg::Pseudo => SamplingMode::PseudoRandom,
        };
    }
    if let Some(v) = cli.pilot {
        cfg.pilot = match v {
            PilotArg::Independent => PilotMode::Independent,
            PilotArg::Reuse => PilotMode::Reuse,
        };
    }
    if let Some(v) = &cli.sweep {
        cfg.strike_sweep = Some(config::parse_sweep(v)?);
    }
    if let Some(v) = &cli.output {
        cfg.output_path = Some(v.clone());
    }
    Ok(cfg)
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// Full-precision decimal form that parses back to the same double.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs every strike of the configuration in order.
pub fn run_config(cfg: &RunConfig) -> Result<Vec<(f64, EstimateReport)>> {
    let market = cfg.market()?;
    let qmc = cfg.qmc()?;
    let method = cfg.method()?;
    let options = cfg.options();
    let strikes = cfg.strikes();
    if strikes.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(config_err("payoff.strike must be positive"));
    }
    strikes
        .into_iter()
        .map(|k| {
            let spec = cfg.payoff_at(k);
            spec.validate()?;
            let report = estimate_with(&market, &spec, &qmc, method, &options)?;
            log::info!(
                "strike {k}: {} paths in {:.2}s, {} rejected, LT fallback columns {}",
                report.path_simulations,
                report.runtime_seconds,
                report.rejected_paths,
                report.lt_fallback_columns
            );
            Ok((k, report))
        })
        .collect()
}

/// Writes result rows; a `strike` column is appended when `sweep` is set.
pub fn write_results<W: Write>(out: W, results: &[(f64, EstimateReport)], sweep: bool) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if sweep {
        header.push("strike");
    }
    w.write_record(&header)?;
    for (strike, r) in results {
        for (c, (d, s)) in r.delta.iter().zip(&r.stderr).enumerate() {
            let mut row = vec![
                (c + 1).to_string(),
                format_f64(*d),
                format_f64(*s),
                r.method.to_string(),
                r.rejected_paths.to_string(),
            ];
            if sweep {
                row.push(format_f64(*strike));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()
}

/// Per-replication component means: `strike,replication,component,mean`.
pub fn write_replications<W: Write>(out: W, results: &[(f64, EstimateReport)]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strike", "replication", "component", "mean"])?;
    for (strike, r) in results {
        for (rep, means) in r.replication_means.iter().enumerate() {
            for (c, v) in means.iter().enumerate() {
                w.write_record([format_f64(*strike), rep.to_string(), (c + 1).to_string(), format_f64(*v)])?;
            }
        }
    }
    w.flush()
}

fn write_target(path: Option<&PathBuf>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p)?);
            f(&mut file)?;
            file.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let results = match run_config(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return if e.is_config() { EXIT_CONFIG } else { EXIT_RUN };
        }
    };
    let sweep = cfg.strike_sweep.is_some();
    if let Err(e) = write_target(cfg.output_path.as_ref(), |w| write_results(w, &results, sweep)) {
        eprintln!("error: writing results: {e}");
        return EXIT_RUN;
    }
    if let Some(p) = &cli.debug_replications {
        if let Err(e) = write_target(Some(p), |w| write_replications(w, &results)) {
            eprintln!("error: writing {}: {e}", p.display());
            return EXIT_RUN;
        }
    }
    EXIT_OK
}
