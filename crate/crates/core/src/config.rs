//! Run configuration: a flat `key = value` file with `[market]`, `[payoff]`,
//! `[qmc]` and `[run]` sections, built-in presets, and command-line
//! overrides.
//!
//! ```text
//! [market]
//! assets = 4
//! steps = 64
//! vols = 0.1, 0.2, 0.3, 0.4
//! correlation = 0.5          # or one row per asset: correlation.1 = 1, 0.5, ...
//!
//! [payoff]
//! kind = digital
//! strike = 100
//!
//! [run]
//! method = adaptive
//! ```
//!
//! Market fields left out take the reference values for the chosen asset
//! and step counts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{config_err, Result};
use crate::estimator::{EstimatorOptions, Method, PilotMode};
use crate::market::{equally_spaced, MarketConfig};
use crate::payoffs::{PayoffKind, PayoffSpec};
use crate::qmc::{QmcConfig, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Adaptive,
    Loc,
    Fd,
}

impl std::str::FromStr for MethodKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adaptive" | "malliavin-adaptive" => Ok(Self::Adaptive),
            "loc" | "malliavin-loc" => Ok(Self::Loc),
            "fd" | "finite-diff" => Ok(Self::Fd),
            other => Err(config_err(format!("unknown method '{other}'"))),
        }
    }
}

/// Correlation as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationSpec {
    Uniform(f64),
    Rows(BTreeMap<usize, (usize, Vec<f64>)>),
}

/// Everything needed for one invocation, before expansion into the engine's
/// structures.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub assets: usize,
    pub steps: usize,
    pub spots: Option<Vec<f64>>,
    pub rate: f64,
    pub vols: Option<Vec<f64>>,
    pub correlation: CorrelationSpec,
    pub maturity: f64,
    pub payoff: PayoffKind,
    pub strike: f64,
    pub points: usize,
    pub replications: usize,
    pub lss_block: Option<usize>,
    pub seed: u64,
    pub mode: SamplingMode,
    pub lt: bool,
    pub method: MethodKind,
    pub loc_delta: f64,
    pub fd_bump: f64,
    pub pilot: PilotMode,
    pub strike_sweep: Option<Vec<f64>>,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            assets: 10,
            steps: 64,
            spots: None,
            rate: 0.05,
            vols: None,
            correlation: CorrelationSpec::Uniform(0.5),
            maturity: 1.0,
            payoff: PayoffKind::AsianFixed,
            strike: 100.0,
            points: 2048,
            replications: 32,
            lss_block: None,
            seed: QmcConfig::standard(1).seed,
            mode: SamplingMode::ScrambledSobol,
            lt: true,
            method: MethodKind::Adaptive,
            loc_delta: 0.01,
            fd_bump: 0.01,
            pilot: PilotMode::Independent,
            strike_sweep: None,
            output_path: None,
        }
    }
}

/// Names accepted by `--preset`.
pub const PRESETS: [&str; 5] = ["table1", "table2", "table3", "table4", "table5"];

/// Reference market with ten assets and 64 dates; `table2`..`table5` select
/// the fixed call, floating call, digital and two-variable contracts
/// (`table1` is the bare market with the fixed call).
pub fn preset(name: &str) -> Result<RunConfig> {
    let payoff = match name.trim().to_ascii_lowercase().as_str() {
        "table1" | "table2" => PayoffKind::AsianFixed,
        "table3" => PayoffKind::AsianFloating,
        "table4" => PayoffKind::Digital,
        "table5" => PayoffKind::Exotic,
        other => return Err(config_err(format!("unknown preset '{other}' (expected one of {PRESETS:?})"))),
    };
    Ok(RunConfig {
        payoff,
        ..RunConfig::default()
    })
}

fn field_err(line: usize, field: &str, msg: impl std::fmt::Display) -> crate::Error {
    config_err(format!("line {line}: {field}: {msg}"))
}

fn parse_f64(line: usize, field: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| field_err(line, field, format!("'{}' is not a number", v.trim())))
}

fn parse_usize(line: usize, field: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| field_err(line, field, format!("'{}' is not a non-negative integer", v.trim())))
}

fn parse_list(line: usize, field: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_f64(line, field, x)).collect()
}

fn parse_bool(line: usize, field: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(field_err(line, field, format!("'{other}' is not on/off"))),
    }
}

pub fn parse_mode(v: &str) -> Result<SamplingMode> {
    match v.trim().to_ascii_lowercase().as_str() {
        "sobol" | "scrambled-sobol" | "scrambled_sobol" => Ok(SamplingMode::ScrambledSobol),
        "pseudo" | "pseudo-random" | "pseudo_random" => Ok(SamplingMode::PseudoRandom),
        other => Err(config_err(format!("unknown sampling mode '{other}'"))),
    }
}

pub fn parse_pilot(v: &str) -> Result<PilotMode> {
    match v.trim().to_ascii_lowercase().as_str() {
        "independent" => Ok(PilotMode::Independent),
        "reuse" => Ok(PilotMode::Reuse),
        other => Err(config_err(format!("unknown pilot mode '{other}'"))),
    }
}

/// `lo:hi:step`, inclusive of `hi` when it lies on the grid.
pub fn parse_sweep(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        return Err(config_err(format!("sweep '{v}' must look like lo:hi:step")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| config_err(format!("sweep '{v}': '{p}' is not a number"))))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(config_err(format!("sweep '{v}' needs 0 < lo <= hi and step > 0")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

impl RunConfig {
    /// Parse a configuration file on top of `base`.
    pub fn parse_into(mut self, text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut rows: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                if !["market", "payoff", "qmc", "run"].contains(&section.as_str()) {
                    return Err(field_err(line, &section, "unknown section"));
                }
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(field_err(line, content, "expected key = value"));
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            if section.is_empty() {
                return Err(field_err(line, &key, "key outside of a section"));
            }
            let field = format!("{section}.{key}");
            let f = field.as_str();
            match (section.as_str(), key.as_str()) {
                ("market", "assets") => self.assets = parse_usize(line, f, value)?,
                ("market", "steps") => self.steps = parse_usize(line, f, value)?,
                ("market", "spots") => self.spots = Some(parse_list(line, f, value)?),
                ("market", "rate") => self.rate = parse_f64(line, f, value)?,
                ("market", "vols") => self.vols = Some(parse_list(line, f, value)?),
                ("market", "maturity") => self.maturity = parse_f64(line, f, value)?,
                ("market", "correlation") => self.correlation = CorrelationSpec::Uniform(parse_f64(line, f, value)?),
                ("market", k) if k.starts_with("correlation.") => {
                    let row = parse_usize(line, f, &k["correlation.".len()..])?;
                    if row == 0 {
                        return Err(field_err(line, f, "rows are numbered from 1"));
                    }
                    rows.insert(row, (line, parse_list(line, f, value)?));
                }
                ("payoff", "kind") => self.payoff = value.parse().map_err(|e| field_err(line, f, e))?,
                ("payoff", "strike") => self.strike = parse_f64(line, f, value)?,
                ("qmc", "points") => self.points = parse_usize(line, f, value)?,
                ("qmc", "replications") => self.replications = parse_usize(line, f, value)?,
                ("qmc", "lss_block") => self.lss_block = Some(parse_usize(line, f, value)?),
                ("qmc", "seed") => {
                    self.seed = value
                        .parse()
                        .map_err(|_| field_err(line, f, format!("'{value}' is not a 64-bit unsigned integer")))?
                }
                ("qmc", "mode") => self.mode = parse_mode(value).map_err(|e| field_err(line, f, e))?,
                ("qmc", "lt") => self.lt = parse_bool(line, f, value)?,
                ("run", "method") => self.method = value.parse().map_err(|e| field_err(line, f, e))?,
                ("run", "loc_delta") => self.loc_delta = parse_f64(line, f, value)?,
                ("run", "fd_bump") => self.fd_bump = parse_f64(line, f, value)?,
                ("run", "pilot") => self.pilot = parse_pilot(value).map_err(|e| field_err(line, f, e))?,
                ("run", "sweep") => self.strike_sweep = Some(parse_sweep(value).map_err(|e| field_err(line, f, e))?),
                ("run", "output") => self.output_path = Some(PathBuf::from(value)),
                _ => return Err(field_err(line, f, "unknown key")),
            }
        }
        if !rows.is_empty() {
            self.correlation = CorrelationSpec::Rows(rows);
        }
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::default().parse_into(text)
    }

    pub fn market(&self) -> Result<MarketConfig> {
        let (m, n) = (self.assets, self.steps);
        if m == 0 {
            return Err(config_err("market.assets must be positive"));
        }
        if n == 0 {
            return Err(config_err("market.steps must be positive"));
        }
        let mut mk = MarketConfig::reference(m, n);
        mk.rate = self.rate;
        mk.maturity = self.maturity;
        mk.monitoring_times = equally_spaced(self.maturity, n);
        if let Some(s) = &self.spots {
            mk.spots = if s.len() == 1 { vec![s[0]; m] } else { s.clone() };
        }
        if let Some(v) = &self.vols {
            mk.vols = if v.len() == 1 { vec![v[0]; m] } else { v.clone() };
        }
        mk.correlation = match &self.correlation {
            CorrelationSpec::Uniform(r) => (0..m)
                .map(|i| (0..m).map(|l| if i == l { 1.0 } else { *r }).collect())
                .collect(),
            CorrelationSpec::Rows(rows) => {
                let mut out = Vec::with_capacity(m);
                for i in 1..=m {
                    let Some((line, row)) = rows.get(&i) else {
                        return Err(config_err(format!("market.correlation.{i}: missing row")));
                    };
                    if row.len() != m {
                        return Err(field_err(
                            *line,
                            &format!("market.correlation.{i}"),
                            format!("expected {m} entries, got {}", row.len()),
                        ));
                    }
                    out.push(row.clone());
                }
                if let Some((&extra, (line, _))) = rows.range(m + 1..).next() {
                    return Err(field_err(*line, &format!("market.correlation.{extra}"), format!("only {m} assets")));
                }
                out
            }
        };
        mk.validate()?;
        Ok(mk)
    }

    pub fn payoff_at(&self, strike: f64) -> PayoffSpec {
        PayoffSpec::new(self.payoff, strike)
    }

    pub fn qmc(&self) -> Result<QmcConfig> {
        let d = self.assets * self.steps;
        let q = QmcConfig {
            nominal_dimension: d,
            points_per_replication: self.points,
            replications: self.replications,
            lss_block_dimension: self.lss_block.unwrap_or(d.min(50)),
            seed: self.seed,
            mode: self.mode,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn method(&self) -> Result<Method> {
        Ok(match self.method {
            MethodKind::Adaptive => Method::MalliavinAdaptive,
            MethodKind::Loc => {
                if !(self.loc_delta > 0.0) {
                    return Err(config_err("run.loc_delta must be positive"));
                }
                Method::MalliavinLoc { delta: self.loc_delta }
            }
            MethodKind::Fd => {
                if !(self.fd_bump > 0.0) {
                    return Err(config_err("run.fd_bump must be positive"));
                }
                Method::FiniteDiff { bump: self.fd_bump }
            }
        })
    }

    pub fn options(&self) -> EstimatorOptions {
        EstimatorOptions {
            lt: self.lt,
            pilot: self.pilot,
        }
    }

    /// Strikes to run: the sweep, or the single configured strike.
    pub fn strikes(&self) -> Vec<f64> {
        self.strike_sweep.clone().unwrap_or_else(|| vec![self.strike])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_encode_reference_market() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            let mk = c.market().unwrap();
            assert_eq!(mk, MarketConfig::reference(10, 64));
            assert_eq!(c.qmc().unwrap().lss_block_dimension, 50);
            assert_eq!(c.points, 2048);
            assert_eq!(c.replications, 32);
        }
        assert_eq!(preset("table4").unwrap().payoff, PayoffKind::Digital);
        assert!(preset("table9").is_err());
    }

    #[test]
    fn parses_full_file() {
        let text = "
            # four assets
            [market]
            assets = 2
            steps = 3
            spots = 90, 110
            vols = 0.2
            correlation.1 = 1, 0.3
            correlation.2 = 0.3, 1
            [payoff]
            kind = digital
            strike = 95
            [qmc]
            points = 128
            replications = 4
            lss_block = 5
            seed = 7
            mode = pseudo
            lt = off
            [run]
            method = loc
            loc_delta = 0.05
            sweep = 80:100:10
        ";
        let c = RunConfig::parse(text).unwrap();
        let mk = c.market().unwrap();
        assert_eq!(mk.spots, vec![90.0, 110.0]);
        assert_eq!(mk.vols, vec![0.2, 0.2]);
        assert_eq!(mk.correlation[0][1], 0.3);
        assert_eq!(c.payoff, PayoffKind::Digital);
        assert_eq!(c.strikes(), vec![80.0, 90.0, 100.0]);
        assert_eq!(c.method().unwrap(), Method::MalliavinLoc { delta: 0.05 });
        assert!(!c.lt);
        assert_eq!(c.qmc().unwrap().mode, SamplingMode::PseudoRandom);
    }

    #[test]
    fn errors_name_line_and_field() {
        let e = RunConfig::parse("[market]\nrate = abc\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("market.rate"), "{e}");
        let e = RunConfig::parse("[qmc]\nbogus = 1\n").unwrap_err().to_string();
        assert!(e.contains("qmc.bogus"), "{e}");
        let e = RunConfig::parse("assets = 3\n").unwrap_err().to_string();
        assert!(e.contains("outside"), "{e}");
    }

    #[test]
    fn missing_correlation_row_is_named() {
        let c = RunConfig::parse("[market]\nassets = 3\nsteps = 2\ncorrelation.1 = 1, 0, 0\ncorrelation.3 = 0, 0, 1\n").unwrap();
        let e = c.market().unwrap_err().to_string();
        assert!(e.contains("market.correlation.2"), "{e}");
        let c = RunConfig::parse("[market]\nassets = 2\ncorrelation.1 = 1, 0\ncorrelation.2 = 0\n").unwrap();
        let e = c.market().unwrap_err().to_string();
        assert!(e.contains("line 4") && e.contains("market.correlation.2"), "{e}");
    }

    #[test]
    fn sweep_grid() {
        assert_eq!(parse_sweep("80:120:5").unwrap().len(), 9);
        assert_eq!(parse_sweep("100:100:1").unwrap(), vec![100.0]);
        assert!(parse_sweep("80:120").is_err());
        assert!(parse_sweep("120:80:5").is_err());
    }
}
