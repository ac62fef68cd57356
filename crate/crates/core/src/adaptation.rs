//! BER-constrained adaptive modulation.
//!
//! The receiver measures the fading level `I` of each block and the
//! transmitter uses the largest `M_j = 2^j`, `j = 1..N`, whose conditional
//! BER at that level stays at or below the target `P_o`. The fading axis is
//! cut at thresholds `I_1 < ... < I_N`, with region `j` being
//! `I_j ≤ I < I_{j+1}` and `I_{N+1} = +∞`. Below `I_1` nothing is sent.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::link::{conditional_ber, LinkBudget, ModOrder};
use crate::numerics::{bisect, integrate_truncated_normal, inverse_q};
use crate::turbulence::Fading;

/// Largest number of orders a scheme may request (`M` up to 65536).
pub const MAX_ORDERS: u32 = 16;

/// Mass below which the link is treated as permanently in outage.
const OUTAGE_MASS: f64 = 1e-12;

/// An order that [`compute_boundaries`] had to leave out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedOrder {
    pub order: ModOrder,
    pub reason: String,
}

/// Thresholds of an adaptive scheme at one average SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveScheme {
    requested_orders: u32,
    target_ber: f64,
    /// `I_1..I_N` followed by the `+∞` sentinel.
    boundaries: Vec<f64>,
    budget: LinkBudget,
    dropped: Vec<DroppedOrder>,
}

impl AdaptiveScheme {
    /// Number of usable orders `N` (after any infeasible ones were dropped).
    pub fn n_orders(&self) -> u32 {
        self.thresholds().len() as u32
    }

    pub fn requested_orders(&self) -> u32 {
        self.requested_orders
    }

    pub fn target_ber(&self) -> f64 {
        self.target_ber
    }

    /// `I_1, ..., I_N, +∞`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// `I_1, ..., I_N`.
    pub fn thresholds(&self) -> &[f64] {
        &self.boundaries[..self.boundaries.len() - 1]
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn dropped(&self) -> &[DroppedOrder] {
        &self.dropped
    }

    /// `M_1, ..., M_N`.
    pub fn orders(&self) -> impl Iterator<Item = ModOrder> {
        (1..=self.n_orders()).map(|b| ModOrder::from_bits(b).expect("bounded by MAX_ORDERS"))
    }

    /// Order for fading level `i`, or `None` when transmission stops.
    /// A level equal to a threshold belongs to the region above it.
    pub fn select(&self, i: f64) -> Option<ModOrder> {
        let count = self.thresholds().partition_point(|&b| b <= i);
        (count > 0).then(|| ModOrder::from_bits(count as u32).expect("bounded by MAX_ORDERS"))
    }
}

/// Region thresholds for `n` orders at target BER `p_o`.
///
/// `I_1 = Q⁻¹(P_o)/√(2γ̄)` and, for `j ≥ 2`,
/// `I_j = Q⁻¹(j·P_o/2) / (sin(π/2^j)·√(2γ̄))`. An order whose target is
/// unreachable (`j·P_o/2 ≥ 1`) or whose threshold would not exceed the
/// previous one is dropped together with every larger order, so the scheme
/// keeps `M_j = 2^j` with a smaller `N`.
pub fn compute_boundaries(n: u32, p_o: f64, budget: LinkBudget) -> Result<AdaptiveScheme> {
    if !(1..=MAX_ORDERS).contains(&n) {
        return Err(Error::Config(format!("number of orders must be in 1..={MAX_ORDERS}, got {n}")));
    }
    if !(p_o > 0.0 && p_o <= 0.5) {
        return Err(Error::Config(format!("target BER must be in (0, 0.5], got {p_o}")));
    }
    let scale = (2.0 * budget.avg_snr()).sqrt().recip();
    let mut boundaries = Vec::with_capacity(n as usize + 1);
    let mut dropped = Vec::new();

    boundaries.push(inverse_q(p_o)? * scale);
    for j in 2..=n {
        let order = ModOrder::from_bits(j)?;
        let per_symbol = f64::from(j) / 2.0 * p_o;
        let reason = if per_symbol >= 1.0 {
            Some(format!("target {p_o} unreachable: needs Q^-1({per_symbol})"))
        } else {
            let sin = (PI / f64::from(order.m())).sin();
            let level = inverse_q(per_symbol)? * scale / sin;
            let prev = *boundaries.last().expect("I_1 present");
            if level > prev {
                boundaries.push(level);
                None
            } else {
                Some(format!("threshold {level:.6e} does not exceed the previous one {prev:.6e}"))
            }
        };
        if let Some(reason) = reason {
            dropped.extend((j..=n).map(|k| DroppedOrder {
                order: ModOrder::from_bits(k).expect("k <= MAX_ORDERS"),
                reason: if k == j { reason.clone() } else { format!("follows dropped {order}") },
            }));
            break;
        }
    }
    boundaries.push(f64::INFINITY);
    Ok(AdaptiveScheme {
        requested_orders: n,
        target_ber: p_o,
        boundaries,
        budget,
        dropped,
    })
}

/// Order for fading level `i`; `None` means no transmission.
pub fn select_order(scheme: &AdaptiveScheme, i: f64) -> Result<Option<ModOrder>> {
    if !(i > 0.0) || i.is_nan() {
        return Err(Error::Domain(format!("fading level must be positive, got {i}")));
    }
    Ok(scheme.select(i))
}

/// Probability of each fading region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionProbabilities {
    /// `P(I < I_1)`.
    pub outage: f64,
    /// `a_j = P(I_j ≤ I < I_{j+1})` for `j = 1..N`.
    pub regions: Vec<f64>,
}

impl RegionProbabilities {
    pub fn total(&self) -> f64 {
        self.outage + self.regions.iter().sum::<f64>()
    }
}

pub fn region_probabilities(scheme: &AdaptiveScheme, fading: &Fading) -> RegionProbabilities {
    let law = fading.log_normal();
    let tails: Vec<f64> = scheme.boundaries.iter().map(|&b| law.survival(b)).collect();
    RegionProbabilities {
        outage: law.survival_complement(scheme.boundaries[0]),
        regions: tails.windows(2).map(|w| w[0] - w[1]).collect(),
    }
}

/// Average transmitted bits per symbol over two: `Σ_j Q(x_j) / 2`, with
/// `x_j` the standardized log-threshold of region `j`.
pub fn spectral_efficiency(scheme: &AdaptiveScheme, fading: &Fading) -> f64 {
    let law = fading.log_normal();
    let s = scheme.thresholds().iter().map(|&b| law.survival(b)).sum::<f64>() / 2.0;
    debug_assert!({
        let probs = region_probabilities(scheme, fading);
        let weighted: f64 = probs.regions.iter().zip(1..).map(|(a, j)| a * f64::from(j)).sum();
        (weighted / 2.0 - s).abs() <= 1e-12
    });
    s
}

/// Ratio of mean erroneous bits to mean transmitted bits.
///
/// Returns `None` when the link is almost surely in outage, where the
/// ratio is undefined.
pub fn average_ber_adaptive(scheme: &AdaptiveScheme, fading: &Fading) -> Result<Option<f64>> {
    let law = fading.log_normal();
    let snr = scheme.budget.avg_snr();
    let mut errors = 0.0;
    let mut bits = 0.0;
    let mut mass = 0.0;
    for (order, edge) in scheme.orders().zip(scheme.boundaries.windows(2)) {
        let weight = f64::from(order.bits());
        let region_mass = integrate_truncated_normal(|_| 1.0, edge[0], edge[1], law.mu, law.sigma)?;
        let region_errors =
            integrate_truncated_normal(|i| conditional_ber(order, i, snr), edge[0], edge[1], law.mu, law.sigma)?;
        mass += region_mass;
        bits += weight * region_mass;
        errors += weight * region_errors;
    }
    if mass < OUTAGE_MASS {
        return Ok(None);
    }
    Ok(Some(errors / bits))
}

/// Number of orders and target BER; thresholds follow from the SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeTemplate {
    pub n_orders: u32,
    pub target_ber: f64,
}

impl SchemeTemplate {
    pub fn new(n_orders: u32, target_ber: f64) -> Self {
        Self { n_orders, target_ber }
    }

    pub fn at(&self, budget: LinkBudget) -> Result<AdaptiveScheme> {
        compute_boundaries(self.n_orders, self.target_ber, budget)
    }

    pub fn at_db(&self, snr_db: f64) -> Result<AdaptiveScheme> {
        self.at(LinkBudget::from_db(snr_db)?)
    }
}

/// Analytic performance at one average SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfPoint {
    pub snr_db: f64,
    /// Thresholds `I_1..I_N` actually used.
    pub thresholds: Vec<f64>,
    pub spectral_eff: f64,
    /// `None` when the link is permanently in outage.
    pub avg_ber: Option<f64>,
    pub outage_prob: f64,
    /// `a_j` (single path) or `b_j` (MIMO), `j = 1..N`.
    pub region_probs: Vec<f64>,
    pub notes: Vec<String>,
}

/// Builds the scheme for `snr_db` and evaluates it.
pub fn evaluate(template: &SchemeTemplate, fading: &Fading, snr_db: f64) -> Result<PerfPoint> {
    let scheme = template.at_db(snr_db)?;
    let probs = region_probabilities(&scheme, fading);
    let avg_ber = average_ber_adaptive(&scheme, fading)?;
    let mut notes: Vec<String> = scheme
        .dropped()
        .iter()
        .map(|d| format!("dropped {}: {}", d.order, d.reason))
        .collect();
    if avg_ber.is_none() {
        notes.push("permanent outage: no order meets the target".into());
    }
    Ok(PerfPoint {
        snr_db,
        thresholds: scheme.thresholds().to_vec(),
        spectral_eff: spectral_efficiency(&scheme, fading),
        avg_ber,
        outage_prob: probs.outage,
        region_probs: probs.regions,
        notes,
    })
}

/// Evaluates every grid point. Grid-level problems (empty or unsorted)
/// are errors; per-point failures are returned in place.
pub fn sweep(template: &SchemeTemplate, fading: &Fading, snr_grid: &[f64]) -> Result<Vec<Result<PerfPoint>>> {
    sweep_with(template, fading, snr_grid, Execution::default())
}

pub fn sweep_with(
    template: &SchemeTemplate,
    fading: &Fading,
    snr_grid: &[f64],
    exec: Execution,
) -> Result<Vec<Result<PerfPoint>>> {
    check_grid(snr_grid)?;
    Ok(map_indexed(snr_grid.len(), exec, |k| evaluate(template, fading, snr_grid[k])))
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("SNR grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("SNR grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("SNR grid must be sorted ascending".into()));
    }
    Ok(())
}

/// Average SNR (dB) at which the adaptive spectral efficiency reaches
/// `target`, searched on `[lo_db, hi_db]`.
pub fn snr_db_for_spectral_efficiency(
    template: &SchemeTemplate,
    fading: &Fading,
    target: f64,
    lo_db: f64,
    hi_db: f64,
) -> Option<f64> {
    bisect(
        |x| match template.at_db(x) {
            Ok(s) => spectral_efficiency(&s, fading) - target,
            Err(_) => f64::NAN,
        },
        lo_db,
        hi_db,
        1e-9,
    )
}
