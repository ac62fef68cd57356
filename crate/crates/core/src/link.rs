//! Non-adaptive subcarrier M-PSK: conditional and fading-averaged BER, and
//! the high-SNR capacity upper bound.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{bisect, db_to_linear, hermite_rule, linear_to_db, q, QuadratureKind, QuadratureRule};
use crate::turbulence::Fading;

/// Physical constituents of the average electrical SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalLink {
    /// Modulation index, strictly between 0 and 1.
    pub mu: f64,
    /// Optical-to-electrical efficiency.
    pub eta: f64,
    /// Average transmitted optical power in watts.
    pub p_opt: f64,
    /// Symbol energy, half the shaping-pulse energy.
    pub e_s: f64,
    /// Noise spectral density.
    pub n_o: f64,
}

/// Average electrical SNR of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    avg_snr: f64,
    physical: Option<PhysicalLink>,
}

impl LinkBudget {
    pub fn from_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::Config(format!("SNR must be finite, got {snr_db} dB")));
        }
        Self::from_linear(db_to_linear(snr_db))
    }

    pub fn from_linear(avg_snr: f64) -> Result<Self> {
        if !(avg_snr > 0.0) || !avg_snr.is_finite() {
            return Err(Error::Config(format!("average SNR must be positive, got {avg_snr}")));
        }
        Ok(Self {
            avg_snr,
            physical: None,
        })
    }

    /// `γ̄ = μ² η² P² E_s / N_o`.
    pub fn from_physical(p: PhysicalLink) -> Result<Self> {
        if !(p.mu > 0.0 && p.mu < 1.0) {
            return Err(Error::Config(format!("modulation index must be in (0, 1), got {}", p.mu)));
        }
        for (name, v) in [("eta", p.eta), ("p_opt", p.p_opt), ("e_s", p.e_s), ("n_o", p.n_o)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let avg_snr = p.mu * p.mu * p.eta * p.eta * p.p_opt * p.p_opt * p.e_s / p.n_o;
        let mut budget = Self::from_linear(avg_snr)?;
        budget.physical = Some(p);
        Ok(budget)
    }

    /// Linear average SNR `γ̄`.
    pub fn avg_snr(&self) -> f64 {
        self.avg_snr
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.avg_snr)
    }

    pub fn physical(&self) -> Option<&PhysicalLink> {
        self.physical.as_ref()
    }

    /// Instantaneous SNR `γ̄ I²` at fading level `i`.
    pub fn instantaneous_snr(&self, i: f64) -> f64 {
        self.avg_snr * i * i
    }
}

/// PSK constellation size `M = 2^bits`, `M ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ModOrder {
    bits: u32,
}

impl ModOrder {
    pub const BPSK: ModOrder = ModOrder { bits: 1 };
    const MAX_BITS: u32 = 16;

    pub fn new(m: u32) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::Config(format!("modulation order must be a power of two >= 2, got {m}")));
        }
        Self::from_bits(m.trailing_zeros())
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        if !(1..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::Config(format!(
                "bits per symbol must be in 1..={}, got {bits}",
                Self::MAX_BITS
            )));
        }
        Ok(Self { bits })
    }

    pub fn m(&self) -> u32 {
        1 << self.bits
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }
}

impl std::fmt::Display for ModOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-PSK", self.m())
    }
}

/// BER at fading level `i` and linear SNR `snr`; `i = 0` is allowed.
#[inline]
pub(crate) fn conditional_ber(m: ModOrder, i: f64, snr: f64) -> f64 {
    let arg = i * (2.0 * snr).sqrt();
    if m.bits == 1 {
        q(arg)
    } else {
        2.0 / f64::from(m.bits) * q(arg * (PI / f64::from(m.m())).sin())
    }
}

/// BER conditioned on the fading level.
///
/// Exact for BPSK, `Q(I√(2γ̄))`. For `M > 2` uses the nearest-neighbour
/// Gray-coding approximation `(2/log₂M)·Q(I√(2γ̄)·sin(π/M))`.
pub fn ber_conditional(m: ModOrder, i: f64, budget: &LinkBudget) -> Result<f64> {
    if !(i > 0.0) || !i.is_finite() {
        return Err(Error::Domain(format!("fading level must be positive and finite, got {i}")));
    }
    Ok(conditional_ber(m, i, budget.avg_snr))
}

/// Fading-averaged BER using the default Gauss-Hermite rule.
pub fn ber_average(m: ModOrder, fading: &Fading, budget: &LinkBudget) -> f64 {
    average_with_rule(m, fading, budget, hermite_rule())
}

/// Fading-averaged BER with a caller-supplied Hermite rule.
pub fn ber_average_with(m: ModOrder, fading: &Fading, budget: &LinkBudget, rule: &QuadratureRule) -> Result<f64> {
    if rule.kind() != QuadratureKind::Hermite {
        return Err(Error::Config("fading averages need a Gauss-Hermite rule".into()));
    }
    Ok(average_with_rule(m, fading, budget, rule))
}

/// Average SNR (dB) at which fixed-order `m` reaches `target` average BER,
/// searched in `[lo_db, hi_db]`.
pub fn snr_db_for_ber(m: ModOrder, fading: &Fading, target: f64, lo_db: f64, hi_db: f64) -> Option<f64> {
    if !(target > 0.0 && target < 0.5) {
        return None;
    }
    let log_target = target.log10();
    bisect(
        |x| match LinkBudget::from_db(x) {
            Ok(b) => ber_average(m, fading, &b).log10() - log_target,
            Err(_) => f64::NAN,
        },
        lo_db,
        hi_db,
        1e-9,
    )
}

fn average_with_rule(m: ModOrder, fading: &Fading, budget: &LinkBudget, rule: &QuadratureRule) -> f64 {
    let law = fading.log_normal();
    let snr = budget.avg_snr;
    rule.normal_expectation(law.mu, law.sigma, |y| conditional_ber(m, y.exp(), snr))
        .clamp(0.0, 0.5)
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    Ok(())
}

fn warn_low_snr(budget: &LinkBudget) {
    if budget.avg_snr < 10.0 {
        log::warn!(
            "capacity upper bound drops a residue that only vanishes at high SNR; {:.2} dB is below 10 dB",
            budget.snr_db()
        );
    }
}

/// `(W/2) E{log₂(γ̄ I²/e)}`, integrated numerically over the fading law.
pub fn capacity_upper_numeric(fading: &Fading, budget: &LinkBudget, bandwidth: f64) -> Result<f64> {
    check_bandwidth(bandwidth)?;
    warn_low_snr(budget);
    let law = fading.log_normal();
    let base = (budget.avg_snr / std::f64::consts::E).log2();
    let mean = hermite_rule().normal_expectation(law.mu, law.sigma, |y| base + 2.0 * y / LN_2);
    Ok(0.5 * bandwidth * mean)
}

/// Closed form of [`capacity_upper_numeric`].
///
/// Splitting the logarithm leaves `log₂(γ̄/e)` times the unit mass plus
/// `2/ln2` times the mean of `ln I`. For a single path that mean is
/// `-2σ_x²`, giving `(W/2)(log₂(γ̄/e) - 4σ_x²/ln2)`. MIMO links use the
/// matched-law mean `m_ξ`, which extends the bound beyond its derivation.
pub fn capacity_upper_closed(fading: &Fading, budget: &LinkBudget, bandwidth: f64) -> Result<f64> {
    check_bandwidth(bandwidth)?;
    warn_low_snr(budget);
    let k1 = 0.5 * bandwidth * (budget.avg_snr / std::f64::consts::E).log2();
    let k2 = if fading.paths() == 1 {
        let s = fading.path().sigma_x();
        -2.0 * bandwidth * s * s / LN_2
    } else {
        bandwidth * fading.log_normal().mu / LN_2
    };
    Ok(k1 + k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gauss_hermite, integrate_truncated_normal, inverse_q};
    use crate::turbulence::{MimoConfig, TurbulenceParams};
    use approx::assert_relative_eq;

    fn siso(s: f64) -> Fading {
        TurbulenceParams::new(s).unwrap().into()
    }

    fn db(x: f64) -> LinkBudget {
        LinkBudget::from_db(x).unwrap()
    }

    #[test]
    fn budget_from_physical() {
        let p = PhysicalLink {
            mu: 0.5,
            eta: 0.8,
            p_opt: 2e-3,
            e_s: 1e-9,
            n_o: 1e-16,
        };
        let b = LinkBudget::from_physical(p).unwrap();
        assert_relative_eq!(b.avg_snr(), 0.25 * 0.64 * 4e-6 * 1e-9 / 1e-16, max_relative = 1e-15);
        assert!(LinkBudget::from_physical(PhysicalLink { mu: 1.0, ..p }).is_err());
        assert!(LinkBudget::from_physical(PhysicalLink { n_o: 0.0, ..p }).is_err());
        assert!(LinkBudget::from_linear(0.0).is_err());
        assert_relative_eq!(db(13.0).snr_db(), 13.0, max_relative = 1e-14);
    }

    #[test]
    fn mod_order_validation() {
        assert!(ModOrder::new(3).is_err());
        assert!(ModOrder::new(1).is_err());
        assert!(ModOrder::new(0).is_err());
        let m = ModOrder::new(16).unwrap();
        assert_eq!((m.m(), m.bits()), (16, 4));
        assert_eq!(ModOrder::from_bits(1).unwrap(), ModOrder::BPSK);
        assert!(ModOrder::from_bits(0).is_err());
    }

    #[test]
    fn conditional_examples() {
        let b = LinkBudget::from_linear(10.0).unwrap();
        let tiny = ber_conditional(ModOrder::BPSK, 1e-300, &b).unwrap();
        assert!((tiny - 0.5).abs() < 1e-15);
        let i = inverse_q(1e-3).unwrap() / 20f64.sqrt();
        assert!((i - 0.6910).abs() < 1e-4);
        assert_relative_eq!(ber_conditional(ModOrder::BPSK, i, &b).unwrap(), 1e-3, max_relative = 1e-10);
        let qpsk = ber_conditional(ModOrder::new(4).unwrap(), 0.6910, &b).unwrap();
        let expected = q(0.6910 * 20f64.sqrt() * (PI / 4.0).sin());
        assert_eq!(qpsk, expected);
        assert!(ber_conditional(ModOrder::BPSK, 0.0, &b).is_err());
    }

    #[test]
    fn conditional_decreasing() {
        let b = db(10.0);
        for bits in 1..=5 {
            let m = ModOrder::from_bits(bits).unwrap();
            let mut last = 1.0;
            for k in 1..100 {
                let v = ber_conditional(m, 0.02 * k as f64, &b).unwrap();
                assert!(v < last && (0.0..=0.5).contains(&v));
                last = v;
            }
        }
    }

    #[test]
    fn degenerate_fading_collapses() {
        let b = db(8.0);
        for bits in 1..=4 {
            let m = ModOrder::from_bits(bits).unwrap();
            let avg = ber_average(m, &siso(1e-8), &b);
            let at_one = ber_conditional(m, 1.0, &b).unwrap();
            assert_relative_eq!(avg, at_one, max_relative = 1e-6);
        }
    }

    #[test]
    fn hermite_agrees_with_panel_integrator() {
        for s in [0.1, 0.3, 0.5] {
            let f = siso(s);
            let law = f.log_normal();
            for snr_db in (0..=30).step_by(2) {
                let b = db(snr_db as f64);
                for bits in 1..=5 {
                    let m = ModOrder::from_bits(bits).unwrap();
                    let gh = ber_average(m, &f, &b);
                    let panels = integrate_truncated_normal(
                        |i| conditional_ber(m, i, b.avg_snr()),
                        0.0,
                        f64::INFINITY,
                        law.mu,
                        law.sigma,
                    )
                    .unwrap();
                    assert!((gh - panels).abs() < 1e-8, "s={s} snr={snr_db} M={}: {gh} vs {panels}", m.m());
                }
            }
        }
    }

    #[test]
    fn ber_average_accepts_only_hermite() {
        let rule = crate::numerics::gauss_legendre(8).unwrap();
        assert!(ber_average_with(ModOrder::BPSK, &siso(0.3), &db(10.0), &rule).is_err());
        let gh = gauss_hermite(40).unwrap();
        assert!(ber_average_with(ModOrder::BPSK, &siso(0.3), &db(10.0), &gh).is_ok());
    }

    #[test]
    fn bpsk_average_against_sampled_fading() {
        // Monte Carlo over fading draws of the conditional BER.
        let f = siso(0.3);
        let b = db(10.0);
        let draws = crate::turbulence::sample_fading(&f, 2024, 4_000_000).unwrap();
        let vals: Vec<f64> = draws.iter().map(|&i| conditional_ber(ModOrder::BPSK, i, b.avg_snr())).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let analytic = ber_average(ModOrder::BPSK, &f, &b);
        assert!((mean - analytic).abs() < 3.0 * sd / n.sqrt(), "{mean} vs {analytic}");
        // Frozen from an independent adaptive-quadrature evaluation.
        assert!((analytic - 0.013_183_177_789_054).abs() < 1e-9, "{analytic}");
    }

    #[test]
    fn fading_hurts_bpsk() {
        for snr_db in [3.0, 6.0, 10.0, 15.0, 20.0] {
            let b = db(snr_db);
            for s in [0.1, 0.3, 0.5] {
                let avg = ber_average(ModOrder::BPSK, &siso(s), &b);
                assert!(avg >= ber_conditional(ModOrder::BPSK, 1.0, &b).unwrap());
            }
        }
    }

    #[test]
    fn capacity_examples() {
        let b = LinkBudget::from_linear(100.0).unwrap();
        let no_fade = capacity_upper_numeric(&siso(1e-8), &b, 1.0).unwrap();
        let limit = 0.5 * (100.0 / std::f64::consts::E).log2();
        assert!((no_fade - limit).abs() < 1e-12);
        assert!((limit - 2.6008).abs() < 5e-4);
        let closed = capacity_upper_closed(&siso(0.5), &b, 1.0).unwrap();
        assert_relative_eq!(closed, 0.5 * ((100.0 / std::f64::consts::E).log2() - 1.0 / LN_2), max_relative = 1e-15);
        assert!((closed - 1.8795).abs() < 1e-3);
        let doubled = LinkBudget::from_linear(200.0).unwrap();
        let c1 = capacity_upper_numeric(&siso(0.3), &b, 2.0).unwrap();
        let c2 = capacity_upper_numeric(&siso(0.3), &doubled, 2.0).unwrap();
        assert!((c2 - c1 - 1.0).abs() < 1e-12);
        assert!(capacity_upper_closed(&siso(0.3), &b, 0.0).is_err());
    }

    #[test]
    fn capacity_numeric_equals_closed() {
        let p = TurbulenceParams::new(0.3).unwrap();
        let fadings: Vec<Fading> = vec![
            siso(0.1),
            siso(0.3),
            siso(0.5),
            MimoConfig::new(p, 2, 2).unwrap().into(),
            MimoConfig::new(p, 1, 1).unwrap().into(),
        ];
        for f in &fadings {
            for snr_db in [10.0, 15.0, 20.0, 25.0] {
                let b = db(snr_db);
                let n = capacity_upper_numeric(f, &b, 1.0).unwrap();
                let c = capacity_upper_closed(f, &b, 1.0).unwrap();
                assert_relative_eq!(n, c, max_relative = 1e-9);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn average_decreasing_in_snr(s in 0.05f64..0.6, a in 0.0f64..29.0, d in 0.2f64..1.0, bits in 1u32..6) {
                let f = siso(s);
                let m = ModOrder::from_bits(bits).unwrap();
                let lo = ber_average(m, &f, &db(a));
                let hi = ber_average(m, &f, &db(a + d));
                prop_assert!(hi < lo);
                prop_assert!((0.0..=0.5).contains(&lo));
            }

            #[test]
            // The (2/log2 M) prefactor breaks the ordering at low SNR, so this
            // only holds once the Q-term dominates.
            fn average_increasing_in_order(s in 0.05f64..0.5, snr in 12.0f64..30.0, bits in 1u32..5) {
                let f = siso(s);
                let b = db(snr);
                let small = ber_average(ModOrder::from_bits(bits).unwrap(), &f, &b);
                let large = ber_average(ModOrder::from_bits(bits + 1).unwrap(), &f, &b);
                prop_assert!(large > small);
            }
        }
    }

    #[test]
    fn required_snr_inverts_average_ber() {
        let f: Fading = TurbulenceParams::new(0.3).unwrap().into();
        let x = snr_db_for_ber(ModOrder::BPSK, &f, 1e-3, 0.0, 60.0).unwrap();
        let b = LinkBudget::from_db(x).unwrap();
        assert_relative_eq!(ber_average(ModOrder::BPSK, &f, &b), 1e-3, max_relative = 1e-7);
        assert!(snr_db_for_ber(ModOrder::BPSK, &f, 1e-3, 0.0, 5.0).is_none());
        assert!(snr_db_for_ber(ModOrder::BPSK, &f, 0.7, 0.0, 60.0).is_none());
    }
}
