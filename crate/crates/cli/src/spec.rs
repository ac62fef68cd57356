//! Sweep specification and the small value types parsed from flags and
//! config files.

use std::fmt;
use std::str::FromStr;

use fso_adapt::turbulence::{Fading, MimoConfig, TurbulenceParams};
use serde::Serialize;

use crate::error::CliError;

/// Largest number of grid points a sweep may request.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectral,
    Ber,
    Thresholds,
    Capacity,
    Simulate,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectral => "spectral",
            Command::Ber => "ber",
            Command::Thresholds => "thresholds",
            Command::Capacity => "capacity",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }
}

/// Inclusive `start:stop:step` grid in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, CliError> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(CliError::usage("SNR range bounds must be finite"));
        }
        if !(step > 0.0) {
            return Err(CliError::usage(format!("SNR step must be positive, got {step}")));
        }
        if start > stop {
            return Err(CliError::usage(format!("SNR start {start} exceeds stop {stop}")));
        }
        let r = SnrRange { start, stop, step };
        if r.count() > MAX_GRID_POINTS {
            return Err(CliError::usage(format!(
                "SNR grid has more than {MAX_GRID_POINTS} points"
            )));
        }
        Ok(r)
    }

    fn count(&self) -> usize {
        ((self.stop - self.start) / self.step * (1.0 + 1e-12) + 1e-9).floor() as usize + 1
    }

    /// Grid points `start + k·step`, the last one not past `stop`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.count())
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }
}

impl FromStr for SnrRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad number {p:?} in SNR range {s:?}")))
        };
        match parts.as_slice() {
            [a] => {
                let a = num(a)?;
                SnrRange::new(a, a, 1.0)
            }
            [a, b, c] => SnrRange::new(num(a)?, num(b)?, num(c)?),
            _ => Err(CliError::usage(format!("SNR range must be start:stop:step, got {s:?}"))),
        }
    }
}

impl fmt::Display for SnrRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Transmitter and receiver aperture counts, written `FxL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mimo {
    pub f: u32,
    pub l: u32,
}

impl FromStr for Mimo {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::usage(format!("MIMO size must look like 2x2, got {s:?}"));
        let (f, l) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let f = f.trim().parse().map_err(|_| bad())?;
        let l = l.trim().parse().map_err(|_| bad())?;
        Ok(Mimo { f, l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::usage(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SimModeArg {
    Fixed,
    Adaptive,
}

impl FromStr for SimModeArg {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(SimModeArg::Fixed),
            "adaptive" => Ok(SimModeArg::Adaptive),
            other => Err(CliError::usage(format!("mode must be fixed or adaptive, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    Default,
    Quick,
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "default" => Ok(Grid::Default),
            "quick" => Ok(Grid::Quick),
            other => Err(CliError::usage(format!("grid must be default or quick, got {other:?}"))),
        }
    }
}

/// Symbol counts accept scientific notation (`1e7`) but must be whole.
pub fn parse_count(s: &str) -> Result<u64, CliError> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s
        .parse()
        .map_err(|_| CliError::usage(format!("bad count {s:?}")))?;
    if x.fract() != 0.0 || !(0.0..=u64::MAX as f64).contains(&x) {
        return Err(CliError::usage(format!("count must be a non-negative integer, got {s:?}")));
    }
    Ok(x as u64)
}

/// Fully resolved parameters of one invocation, echoed in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub command: Command,
    pub snr_db_range: SnrRange,
    pub sigma_x: f64,
    pub p_o: f64,
    pub n_orders: u32,
    pub mimo: Option<Mimo>,
    pub seed: u64,
    pub output_path: Option<String>,
    pub format: Format,
    pub mode: Option<SimModeArg>,
    pub order: Option<u32>,
    pub snr_db: Option<f64>,
    pub symbols: Option<u64>,
    pub block_len: Option<u64>,
    pub grid: Option<Grid>,
    pub tolerance: Option<f64>,
}

impl SweepSpec {
    pub fn fading(&self) -> Result<Fading, CliError> {
        let path = TurbulenceParams::new(self.sigma_x)?;
        Ok(match self.mimo {
            Some(m) => MimoConfig::new(path, m.f, m.l)?.into(),
            None => path.into(),
        })
    }
}
