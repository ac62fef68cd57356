//! Special functions and quadrature rules.
//!
//! Everything here is a pure function of its inputs. Quadrature rules are
//! built once and shared through [`hermite_rule`] / the internal Legendre
//! panel rule.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// Standard-normal half-width, in log-domain standard deviations, used in
/// place of an infinite integration limit.
pub const TAIL_CUTOFF: f64 = 10.0;

/// Default Gauss-Hermite order for fading averages.
pub const DEFAULT_HERMITE_ORDER: usize = 128;

const LEGENDRE_PANEL_ORDER: usize = 16;
const PANEL_WIDTH: f64 = 0.5;

/// Gaussian tail probability without argument checks. NaN propagates.
#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Gaussian Q-function, `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("q_function argument must be finite, got {x}")));
    }
    Ok(q(x))
}

/// Standard normal density.
#[inline]
pub(crate) fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of [`q_function`]: returns `x` with `Q(x) = p`.
///
/// Newton iteration on `ln Q(x) - ln p`, kept inside a shrinking bracket and
/// falling back to bisection whenever a step leaves it. Working in the log
/// domain keeps the iteration well conditioned deep in the tail.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("inverse_q needs 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        // 1 - p is exact for p in [0.5, 1].
        return Ok(-upper_tail_inverse(1.0 - p));
    }
    Ok(upper_tail_inverse(p))
}

/// Solves `Q(x) = p` for `p < 0.5`, so `x > 0`.
fn upper_tail_inverse(p: f64) -> f64 {
    let target = p.ln();
    let (mut lo, mut hi) = (0.0_f64, 39.0_f64);

    // Abramowitz & Stegun 26.2.23 starting point (|error| < 4.5e-4).
    let t = (-2.0 * target).sqrt();
    let mut x = t
        - (2.515_517 + t * (0.802_853 + t * 0.010_328))
            / (1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308)));
    x = x.clamp(lo, hi);

    for _ in 0..200 {
        let qx = q(x);
        let h = qx.ln() - target;
        if h == 0.0 {
            return x;
        }
        // ln Q is decreasing: positive residual means x is too small.
        if h > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = -normal_pdf(x) / qx;
        let mut next = x - h / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return next;
        }
        x = next;
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    x
}

/// Converts decibels to a linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to decibels.
#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Bisection root of `f` on `[lo, hi]`. Returns `None` when `f` does not
/// change sign over the bracket.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureKind {
    /// Physicists' Hermite rule, weight `exp(-t^2)` on the real line.
    Hermite,
    /// Legendre rule, unit weight on `[-1, 1]`.
    Legendre,
}

/// Nodes and weights of a Gaussian quadrature rule, nodes ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: QuadratureKind,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Expectation of `g(Z)` for `Z ~ N(mean, std^2)` using a Hermite rule.
    pub(crate) fn normal_expectation(&self, mean: f64, std: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        debug_assert_eq!(self.kind, QuadratureKind::Hermite);
        const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;
        INV_SQRT_PI * self.integrate(|t| g(mean + SQRT_2 * std * t))
    }
}

fn check_order(order: usize) -> Result<()> {
    if !(2..=128).contains(&order) {
        return Err(Error::Config(format!("quadrature order must be in 2..=128, got {order}")));
    }
    Ok(())
}

/// Gauss-Hermite rule of the given order (weight `exp(-t^2)`).
///
/// Roots are refined by Newton's method on the orthonormal Hermite
/// recurrence, starting from asymptotic estimates of the largest roots and
/// extrapolating inward from the previously found ones.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    check_order(order)?;
    let n = order;
    let nf = n as f64;
    let half = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0_f64;

    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p1, p2) = orthonormal_hermite(n, z);
            deriv = (2.0 * nf).sqrt() * p2;
            let step = p1 / deriv;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        // One more evaluation at the converged root for the weight.
        let (_, p2) = orthonormal_hermite(n, z);
        if p2 != 0.0 {
            deriv = (2.0 * nf).sqrt() * p2;
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        let w = 2.0 / (deriv * deriv);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[half - 1] = 0.0;
    }
    nodes.reverse();
    weights.reverse();
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::Hermite,
    })
}

/// Returns `(h_n(z), h_{n-1}(z))` for the orthonormal Hermite polynomials.
fn orthonormal_hermite(n: usize, z: f64) -> (f64, f64) {
    const PI_M4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let mut p1 = PI_M4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}

/// Gauss-Legendre rule of the given order on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    check_order(order)?;
    let n = order;
    let nf = n as f64;
    let half = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p1, p2) = legendre(n, z);
            deriv = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / deriv;
            z -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (p1, p2) = legendre(n, z);
        if z * z != 1.0 {
            deriv = nf * (z * p1 - p2) / (z * z - 1.0);
        }
        // cos() ordering gives descending roots.
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * deriv * deriv);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[half - 1] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::Legendre,
    })
}

/// Returns `(P_n(z), P_{n-1}(z))`.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
    }
    (p1, p2)
}

/// Shared Hermite rule of the default order.
pub fn hermite_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(DEFAULT_HERMITE_ORDER).expect("default order is valid"))
}

fn panel_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LEGENDRE_PANEL_ORDER).expect("panel order is valid"))
}

/// `∫_lo^hi f(I) p(I) dI` where `ln I ~ N(mean, std^2)`.
///
/// The integral is taken in the standardized variable `u`, with
/// `I = exp(mean + std·u)`, over composite Gauss-Legendre panels. Infinite
/// or zero limits map to `±TAIL_CUTOFF` in `u`. A negative `lo` is clamped
/// to zero.
pub fn integrate_truncated_normal(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    mean: f64,
    std: f64,
) -> Result<f64> {
    if !(std > 0.0) || !std.is_finite() || !mean.is_finite() {
        return Err(Error::Config(format!(
            "log-domain parameters must be finite with std > 0, got mean={mean}, std={std}"
        )));
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::EmptyRegion { lo, hi });
    }
    let lo = if lo < 0.0 {
        log::warn!("lower integration limit {lo} clamped to 0");
        0.0
    } else {
        lo
    };
    let to_u = |i: f64| ((i.ln() - mean) / std).clamp(-TAIL_CUTOFF, TAIL_CUTOFF);
    let u_lo = to_u(lo);
    let u_hi = to_u(hi);
    if u_lo >= u_hi {
        return Ok(0.0);
    }
    let rule = panel_rule();
    let panels = ((u_hi - u_lo) / PANEL_WIDTH).ceil().max(1.0) as usize;
    let width = (u_hi - u_lo) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for k in 0..panels {
        let center = u_lo + (k as f64 + 0.5) * width;
        total += half * rule.integrate(|t| {
            let u = center + half * t;
            f((mean + std * u).exp()) * normal_pdf(u)
        });
    }
    Ok(total)
}
