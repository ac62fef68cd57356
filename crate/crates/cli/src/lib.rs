//! Command-line front end for `fso-adapt`: analytic sweeps written as CSV
//! or JSON, Monte Carlo runs and a simulator-versus-analytics validation
//! suite.
//!
//! Parameters come from flags, then from an optional `--config` file of
//! `key = value` lines, then from built-in defaults. Relative output paths
//! (and the default output file when `--out` is absent) are placed under
//! the directory named by [`OUT_DIR_ENV`] when it is set.

// NaN must fail every range check, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod spec;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_ber, cmd_capacity, cmd_simulate, cmd_spectral, cmd_thresholds, cmd_validate, Outcome,
};
pub use config::ConfigFile;
pub use error::{CliError, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
pub use spec::{Command, Format, Grid, Mimo, SimModeArg, SnrRange, SweepSpec};
pub use table::{Cell, Table};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FSO_ADAPT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "fso-adapt", version, about = "Adaptive subcarrier PSK over lognormal FSO channels")]
pub struct Cli {
    /// key = value file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Adaptive, capacity-bound and fixed-BPSK spectral efficiency.
    Spectral(CommonArgs),
    /// Adaptive and fixed-order average BER.
    Ber(CommonArgs),
    /// Switching thresholds I_1..I_N.
    Thresholds(CommonArgs),
    /// Capacity upper bound, closed form and quadrature.
    Capacity(CommonArgs),
    /// Monte Carlo run at one SNR.
    Simulate(SimulateArgs),
    /// Simulator-versus-analytics checks; exits 1 on any failure.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Log-amplitude standard deviation, in (0, 1].
    #[arg(long)]
    pub sigma_x: Option<f64>,
    /// Target bit error rate.
    #[arg(long)]
    pub po: Option<f64>,
    /// Number of modulation orders (BPSK .. 2^N-PSK).
    #[arg(long)]
    pub n: Option<u32>,
    /// SNR grid in dB as start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<SnrRange>,
    /// Transmit x receive apertures, e.g. 2x2.
    #[arg(long)]
    pub mimo: Option<Mimo>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub mode: Option<SimModeArg>,
    /// Constellation size for fixed mode.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Symbol count; scientific notation such as 1e7 is accepted.
    #[arg(long, value_parser = spec::parse_count)]
    pub symbols: Option<u64>,
    /// Symbols per fading block.
    #[arg(long)]
    pub block_len: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub grid: Option<Grid>,
    /// Relative tolerance for gated comparisons.
    #[arg(long, allow_hyphen_values = true)]
    pub tolerance: Option<f64>,
}

fn pick<T>(flag: Option<T>, config: Result<Option<T>, CliError>) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => config,
    }
}

/// Merges flags over the config file over defaults, and places the output
/// path under `out_dir` when appropriate.
pub fn resolve(cli: &Cli, out_dir: Option<&Path>) -> Result<SweepSpec, CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let (command, common) = match &cli.command {
        Sub::Spectral(c) => (Command::Spectral, c),
        Sub::Ber(c) => (Command::Ber, c),
        Sub::Thresholds(c) => (Command::Thresholds, c),
        Sub::Capacity(c) => (Command::Capacity, c),
        Sub::Simulate(a) => (Command::Simulate, &a.common),
        Sub::Validate(a) => (Command::Validate, &a.common),
    };
    let cfg = &config;
    let out = pick(common.out.clone(), cfg.get::<PathBuf>("out"))?;
    let format = pick(common.format, cfg.get::<Format>("format"))?.unwrap_or_else(|| {
        match out.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    });
    let out = match (out, out_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p),
        (None, Some(dir)) => {
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            Some(dir.join(format!("{}.{ext}", command.name())))
        }
        (None, None) => None,
    };

    let mut spec = SweepSpec {
        command,
        snr_db_range: pick(common.snr, cfg.get("snr"))?.unwrap_or(SnrRange {
            start: 0.0,
            stop: 30.0,
            step: 0.5,
        }),
        sigma_x: pick(common.sigma_x, cfg.get("sigma-x"))?.unwrap_or(0.3),
        p_o: pick(common.po, cfg.get("po"))?.unwrap_or(1e-3),
        n_orders: pick(common.n, cfg.get("n"))?.unwrap_or(5),
        mimo: pick(common.mimo, cfg.get("mimo"))?,
        seed: pick(common.seed, cfg.get("seed"))?.unwrap_or(42),
        output_path: out.map(|p| p.display().to_string()),
        format,
        mode: None,
        order: None,
        snr_db: None,
        symbols: None,
        block_len: None,
        grid: None,
        tolerance: None,
    };
    match &cli.command {
        Sub::Simulate(a) => {
            spec.mode = Some(pick(a.mode, cfg.get("mode"))?.unwrap_or(SimModeArg::Adaptive));
            spec.order = pick(a.order, cfg.get("order"))?;
            spec.snr_db = pick(a.snr_db, cfg.get("snr-db"))?;
            spec.symbols = Some(
                pick(a.symbols, cfg.get_with("symbols", |s| spec::parse_count(s).map_err(|e| e.to_string())))?
                    .unwrap_or(1_000_000),
            );
            spec.block_len = Some(pick(a.block_len, cfg.get("block-len"))?.unwrap_or(1));
        }
        Sub::Validate(a) => {
            spec.grid = Some(pick(a.grid, cfg.get("grid"))?.unwrap_or(Grid::Default));
            spec.tolerance = Some(pick(a.tolerance, cfg.get("tolerance"))?.unwrap_or(0.05));
        }
        _ => {}
    }
    if !(spec.p_o > 0.0 && spec.p_o <= 0.5) {
        return Err(CliError::usage(format!("--po must be in (0, 0.5], got {}", spec.p_o)));
    }
    Ok(spec)
}

pub fn execute(spec: &SweepSpec) -> Result<Outcome, CliError> {
    match spec.command {
        Command::Spectral => cmd_spectral(spec),
        Command::Ber => cmd_ber(spec),
        Command::Thresholds => cmd_thresholds(spec),
        Command::Capacity => cmd_capacity(spec),
        Command::Simulate => cmd_simulate(spec),
        Command::Validate => cmd_validate(spec),
    }
}

fn emit(spec: &SweepSpec, outcome: &Outcome, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let bytes = outcome.table.encode(spec)?;
    match &spec.output_path {
        Some(path) => {
            let path = Path::new(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &bytes)?;
            writeln!(stderr, "wrote {}", path.display())?;
        }
        None => stdout.write_all(&bytes)?,
    }
    for note in &outcome.notes {
        writeln!(stderr, "{note}")?;
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = resolve(&cli, out_dir).and_then(|spec| {
        let outcome = execute(&spec)?;
        emit(&spec, &outcome, stdout, stderr)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) if outcome.failed => {
            let _ = writeln!(stderr, "validation failed");
            EXIT_FAILURE
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
