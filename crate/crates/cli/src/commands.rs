//! One function per subcommand. Each turns a resolved [`SweepSpec`] into a
//! [`Table`] plus free-form notes.

use fso_adapt::adaptation::{compute_boundaries, spectral_efficiency, sweep, SchemeTemplate};
use fso_adapt::link::{
    ber_average, capacity_upper_closed, capacity_upper_numeric, snr_db_for_ber, LinkBudget, ModOrder,
};
use fso_adapt::simulator::{self, validate_point, SimConfig, SimMode, ValidationTarget, Verdict};
use fso_adapt::turbulence::{Fading, MimoConfig, TurbulenceParams};

use crate::error::CliError;
use crate::spec::{Grid, SimModeArg, SweepSpec};
use crate::table::{Cell, Table};

/// Search window for the SNR at which fixed BPSK meets the target.
const BPSK_SEARCH_DB: (f64, f64) = (-50.0, 150.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub notes: Vec<String>,
    /// Set when a validation check failed.
    pub failed: bool,
}

impl Outcome {
    fn ok(table: Table, notes: Vec<String>) -> Self {
        Outcome {
            table,
            notes,
            failed: false,
        }
    }
}

fn push_unique(notes: &mut Vec<String>, note: String) {
    if !notes.contains(&note) {
        notes.push(note);
    }
}

fn template(spec: &SweepSpec) -> SchemeTemplate {
    SchemeTemplate::new(spec.n_orders, spec.p_o)
}

/// Columns: `snr_db, S_adaptive, S_capacity_upper, S_bpsk_nonadaptive,
/// outage_prob`. The non-adaptive column is a step from 0 to 0.5 at the
/// SNR where fixed BPSK meets the BER target.
pub fn cmd_spectral(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let fading = spec.fading()?;
    let grid = spec.snr_db_range.points();
    let points = sweep(&template(spec), &fading, &grid)?;
    let (lo, hi) = BPSK_SEARCH_DB;
    let bpsk_req = snr_db_for_ber(ModOrder::BPSK, &fading, spec.p_o, lo, hi);
    let mut notes = Vec::new();
    match bpsk_req {
        Some(x) => notes.push(format!("fixed BPSK meets {} at {x:.6} dB", spec.p_o)),
        None => notes.push(format!("fixed BPSK never meets {} in [{lo}, {hi}] dB", spec.p_o)),
    }
    let mut table = Table::new([
        "snr_db",
        "S_adaptive",
        "S_capacity_upper",
        "S_bpsk_nonadaptive",
        "outage_prob",
    ]);
    for (x, point) in grid.iter().zip(points) {
        let point = point?;
        for n in &point.notes {
            push_unique(&mut notes, n.clone());
        }
        let budget = LinkBudget::from_db(*x)?;
        let step = match bpsk_req {
            Some(req) if *x >= req => 0.5,
            _ => 0.0,
        };
        table.push(vec![
            (*x).into(),
            point.spectral_eff.into(),
            capacity_upper_closed(&fading, &budget, 1.0)?.into(),
            step.into(),
            point.outage_prob.into(),
        ]);
    }
    Ok(Outcome::ok(table, notes))
}

/// Columns: `snr_db, ber_adaptive, ber_fixed_2 .. ber_fixed_{2^N},
/// p_o_reference`. `ber_adaptive` is empty where the link is in outage.
pub fn cmd_ber(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let fading = spec.fading()?;
    let grid = spec.snr_db_range.points();
    let points = sweep(&template(spec), &fading, &grid)?;
    let orders: Vec<ModOrder> = (1..=spec.n_orders)
        .map(ModOrder::from_bits)
        .collect::<Result<_, _>>()?;
    let mut columns = vec!["snr_db".to_string(), "ber_adaptive".to_string()];
    columns.extend(orders.iter().map(|m| format!("ber_fixed_{}", m.m())));
    columns.push("p_o_reference".into());
    let mut table = Table::new(columns);
    let mut notes = Vec::new();
    for (x, point) in grid.iter().zip(points) {
        let point = point?;
        for n in &point.notes {
            push_unique(&mut notes, n.clone());
        }
        let budget = LinkBudget::from_db(*x)?;
        let mut row: Vec<Cell> = vec![(*x).into(), point.avg_ber.into()];
        row.extend(orders.iter().map(|m| Cell::Num(ber_average(*m, &fading, &budget))));
        row.push(spec.p_o.into());
        table.push(row);
    }
    Ok(Outcome::ok(table, notes))
}

/// Columns: `snr_db, I_1 .. I_N`; orders that cannot meet the target are
/// left empty.
pub fn cmd_thresholds(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let mut columns = vec!["snr_db".to_string()];
    columns.extend((1..=spec.n_orders).map(|j| format!("I_{j}")));
    let mut table = Table::new(columns);
    let mut notes = Vec::new();
    for x in spec.snr_db_range.points() {
        let scheme = compute_boundaries(spec.n_orders, spec.p_o, LinkBudget::from_db(x)?)?;
        for d in scheme.dropped() {
            push_unique(&mut notes, format!("dropped {}: {}", d.order, d.reason));
        }
        let mut row: Vec<Cell> = vec![x.into()];
        let th = scheme.thresholds();
        row.extend((0..spec.n_orders as usize).map(|j| th.get(j).copied().into()));
        table.push(row);
    }
    Ok(Outcome::ok(table, notes))
}

/// Columns: `snr_db, capacity_closed, capacity_numeric`, in bit/s/Hz.
pub fn cmd_capacity(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let fading = spec.fading()?;
    let mut table = Table::new(["snr_db", "capacity_closed", "capacity_numeric"]);
    for x in spec.snr_db_range.points() {
        let budget = LinkBudget::from_db(x)?;
        table.push(vec![
            x.into(),
            capacity_upper_closed(&fading, &budget, 1.0)?.into(),
            capacity_upper_numeric(&fading, &budget, 1.0)?.into(),
        ]);
    }
    let notes = vec!["upper bound is loose below 10 dB".to_string()];
    Ok(Outcome::ok(table, notes))
}

/// One row describing a Monte Carlo run, with analytic references.
pub fn cmd_simulate(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let snr_db = spec
        .snr_db
        .ok_or_else(|| CliError::usage("simulate needs --snr-db"))?;
    let symbols = spec.symbols.unwrap_or(1_000_000);
    let k = spec.block_len.unwrap_or(1);
    if symbols == 0 || k == 0 {
        return Err(CliError::usage("--symbols and --block-len must be at least 1"));
    }
    let fading = spec.fading()?;
    let budget = LinkBudget::from_db(snr_db)?;
    let (mode, ber_analytic, s_analytic) = match spec.mode.unwrap_or(SimModeArg::Adaptive) {
        SimModeArg::Fixed => {
            let m = ModOrder::new(spec.order.unwrap_or(2))?;
            let s = f64::from(m.bits()) / 2.0;
            (SimMode::Fixed(m), Some(ber_average(m, &fading, &budget)), s)
        }
        SimModeArg::Adaptive => {
            let scheme = template(spec).at(budget)?;
            let s = spectral_efficiency(&scheme, &fading);
            let p = fso_adapt::adaptation::average_ber_adaptive(&scheme, &fading)?;
            (SimMode::Adaptive(scheme), p, s)
        }
    };
    let config = SimConfig {
        blocks: symbols.div_ceil(k),
        symbols_per_block: k,
        seed: spec.seed,
        mode,
        channel: fading,
        budget,
    };
    let r = simulator::run(&config)?;
    let mut columns: Vec<String> = [
        "snr_db",
        "blocks",
        "block_len",
        "symbols",
        "bits_sent",
        "bit_errors",
        "ber",
        "ber_ci95",
        "ber_analytic",
        "throughput_bits_per_symbol",
        "spectral_eff_sim",
        "spectral_eff_analytic",
        "outage_fraction",
    ]
    .map(String::from)
    .to_vec();
    columns.extend((0..r.per_region_histogram.len()).map(|b| format!("region_{b}")));
    let mut row: Vec<Cell> = vec![
        snr_db.into(),
        r.blocks.into(),
        k.into(),
        r.symbols.into(),
        r.bits_sent.into(),
        r.bit_errors.into(),
        r.ber_point.into(),
        r.ber_ci95.into(),
        ber_analytic.into(),
        r.throughput_bits_per_symbol.into(),
        r.spectral_efficiency().into(),
        s_analytic.into(),
        r.outage_fraction.into(),
    ];
    row.extend(r.region_fractions().into_iter().map(Cell::Num));
    let mut table = Table::new(columns);
    table.push(row);
    let mut notes = Vec::new();
    if fading.is_mimo() {
        notes.push("analytic columns use the lognormal approximation of the combined fading".into());
    }
    Ok(Outcome::ok(table, notes))
}

/// One simulator-versus-analytics check of the validation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCase {
    pub label: String,
    pub sigma_x: f64,
    pub mimo: Option<(u32, u32)>,
    pub snr_db: f64,
    pub target: ValidationTarget,
}

impl ValidationCase {
    fn fading(&self) -> Result<Fading, CliError> {
        let p = TurbulenceParams::new(self.sigma_x)?;
        Ok(match self.mimo {
            Some((f, l)) => MimoConfig::new(p, f, l)?.into(),
            None => p.into(),
        })
    }
}

pub fn validation_cases(grid: Grid) -> Vec<ValidationCase> {
    let bpsk = |s: f64, x: f64| ValidationCase {
        label: format!("bpsk s={s} {x}dB"),
        sigma_x: s,
        mimo: None,
        snr_db: x,
        target: ValidationTarget::Fixed(ModOrder::BPSK),
    };
    let adaptive = |s: f64, mimo: Option<(u32, u32)>, x: f64| ValidationCase {
        label: match mimo {
            Some((f, l)) => format!("adaptive {f}x{l} s={s} {x}dB"),
            None => format!("adaptive s={s} {x}dB"),
        },
        sigma_x: s,
        mimo,
        snr_db: x,
        target: ValidationTarget::Adaptive(SchemeTemplate::new(5, 1e-3)),
    };
    let psk8 = |x: f64| ValidationCase {
        label: format!("8psk s=0.1 {x}dB"),
        sigma_x: 0.1,
        mimo: None,
        snr_db: x,
        target: ValidationTarget::Fixed(ModOrder::new(8).expect("8 is a power of two")),
    };
    match grid {
        Grid::Default => {
            let mut cases = Vec::new();
            for s in [0.1, 0.3, 0.5] {
                for x in [5.0, 10.0, 15.0, 20.0] {
                    cases.push(bpsk(s, x));
                }
            }
            for x in [10.0, 15.0, 20.0] {
                cases.push(adaptive(0.3, None, x));
            }
            cases.push(psk8(15.0));
            cases.push(adaptive(0.3, Some((2, 2)), 15.0));
            cases
        }
        Grid::Quick => vec![
            bpsk(0.5, 10.0),
            adaptive(0.3, None, 15.0),
            psk8(12.0),
            adaptive(0.3, Some((2, 2)), 15.0),
        ],
    }
}

/// `(1,1)` MIMO must reproduce single-path analytics and simulation bit
/// for bit.
fn one_by_one_equivalence(seed: u64) -> Result<bool, CliError> {
    let p = TurbulenceParams::new(0.3)?;
    let siso: Fading = p.into();
    let mimo: Fading = MimoConfig::new(p, 1, 1)?.into();
    let t = SchemeTemplate::new(5, 1e-3);
    let grid: Vec<f64> = (0..=30).map(f64::from).collect();
    let mut same = sweep(&t, &siso, &grid)? == sweep(&t, &mimo, &grid)?;
    for &x in &grid {
        let b = LinkBudget::from_db(x)?;
        same &= capacity_upper_closed(&siso, &b, 1.0)? == capacity_upper_closed(&mimo, &b, 1.0)?;
        same &= ber_average(ModOrder::BPSK, &siso, &b) == ber_average(ModOrder::BPSK, &mimo, &b);
    }
    let budget = LinkBudget::from_db(15.0)?;
    let config = |channel| SimConfig {
        blocks: 20_000,
        symbols_per_block: 4,
        seed,
        mode: SimMode::Adaptive(t.at(budget).expect("valid template")),
        channel,
        budget,
    };
    same &= simulator::run(&config(siso))? == simulator::run(&config(mimo))?;
    Ok(same)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
        Verdict::Reported => "reported",
    }
}

/// Runs the validation grid. Any `fail` row sets [`Outcome::failed`].
pub fn cmd_validate(spec: &SweepSpec) -> Result<Outcome, CliError> {
    let tolerance = spec.tolerance.unwrap_or(0.05);
    let cases = validation_cases(spec.grid.unwrap_or(Grid::Default));
    let mut table = Table::new([
        "case",
        "snr_db",
        "verdict",
        "tolerance",
        "analytic_ber",
        "simulated_ber",
        "ber_ci95",
        "ber_gap",
        "analytic_S",
        "simulated_S",
        "symbols",
        "message",
    ]);
    let mut failed = false;
    let mut notes = Vec::new();
    for (idx, case) in cases.iter().enumerate() {
        let fading = case.fading()?;
        let seed = spec.seed.wrapping_add(idx as u64);
        let row = match validate_point(case.snr_db, &fading, &case.target, tolerance, seed) {
            Ok(v) => {
                failed |= v.verdict == Verdict::Fail;
                let report = v.report.as_ref();
                vec![
                    case.label.as_str().into(),
                    case.snr_db.into(),
                    verdict_name(v.verdict).into(),
                    tolerance.into(),
                    v.analytic_ber.into(),
                    report.map(|r| r.ber_point).into(),
                    report.map(|r| r.ber_ci95).into(),
                    v.ber_gap.into(),
                    v.analytic_spectral_eff.into(),
                    v.simulated_spectral_eff.into(),
                    report.map_or(Cell::Missing, |r| Cell::Int(r.symbols)),
                    v.messages.join("; ").into(),
                ]
            }
            Err(e) => {
                failed = true;
                vec![
                    case.label.as_str().into(),
                    case.snr_db.into(),
                    "fail".into(),
                    tolerance.into(),
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    e.to_string().into(),
                ]
            }
        };
        notes.push(format!("{:<12} {}", row[2].to_csv(), case.label));
        table.push(row);
    }
    let same = one_by_one_equivalence(spec.seed)?;
    failed |= !same;
    let verdict = if same { "pass" } else { "fail" };
    notes.push(format!("{verdict:<12} 1x1 mimo equals siso"));
    let mut row = vec![Cell::from("1x1 mimo equals siso"), Cell::Missing, verdict.into()];
    row.extend(std::iter::repeat_n(Cell::Missing, 8));
    row.push(if same { "bit-identical" } else { "outputs differ" }.into());
    table.push(row);
    Ok(Outcome {
        table,
        notes,
        failed,
    })
}
