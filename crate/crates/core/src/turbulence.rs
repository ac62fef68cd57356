//! Lognormal turbulence-induced fading.
//!
//! A single optical path has intensity `I = exp(2x)` with
//! `x ~ N(-σ_x², σ_x²)`, which normalizes `E{I} = 1`. For an `F×L` MIMO link
//! with equal gain combining the decision variable is the mean of the `F·L`
//! path intensities. Its law is approximated by a lognormal with matched
//! first and second moments; the sampler draws the exact mean instead.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::numerics::{normal_pdf, q};

/// Parameters of one lognormal fading path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurbulenceParams {
    sigma_x: f64,
}

impl TurbulenceParams {
    /// `sigma_x` is the log-amplitude standard deviation, in `(0, 1]`.
    pub fn new(sigma_x: f64) -> Result<Self> {
        if !(sigma_x > 0.0 && sigma_x <= 1.0) {
            return Err(Error::Config(format!(
                "sigma_x must lie in (0, 1] for the lognormal model, got {sigma_x}"
            )));
        }
        Ok(Self { sigma_x })
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    /// Log-amplitude mean, always `-sigma_x²`.
    pub fn m_x(&self) -> f64 {
        -self.sigma_x * self.sigma_x
    }

    /// Unfaded intensity, fixed to one.
    pub fn i_o(&self) -> f64 {
        1.0
    }

    /// Law of `ln I`: mean `2 m_x`, standard deviation `2 sigma_x`.
    pub fn log_normal(&self) -> LogNormal {
        LogNormal {
            mu: 2.0 * self.m_x(),
            sigma: 2.0 * self.sigma_x,
        }
    }
}

/// `F` transmit and `L` receive apertures over independent, identically
/// distributed paths, combined with equal gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MimoConfig {
    f_tx: u32,
    l_rx: u32,
    path: TurbulenceParams,
    sigma_xi_sq: f64,
}

impl MimoConfig {
    pub fn new(path: TurbulenceParams, f_tx: u32, l_rx: u32) -> Result<Self> {
        if f_tx == 0 || l_rx == 0 {
            return Err(Error::Config(format!(
                "aperture counts must be at least 1, got {f_tx}x{l_rx}"
            )));
        }
        let fl = f64::from(f_tx) * f64::from(l_rx);
        let four_var = 4.0 * path.sigma_x * path.sigma_x;
        let sigma_xi_sq = if f_tx == 1 && l_rx == 1 {
            four_var
        } else {
            (four_var.exp_m1() / fl).ln_1p()
        };
        Ok(Self {
            f_tx,
            l_rx,
            path,
            sigma_xi_sq,
        })
    }

    pub fn f_tx(&self) -> u32 {
        self.f_tx
    }

    pub fn l_rx(&self) -> u32 {
        self.l_rx
    }

    /// Number of independent paths, `F·L`.
    pub fn paths(&self) -> u32 {
        self.f_tx * self.l_rx
    }

    pub fn path(&self) -> TurbulenceParams {
        self.path
    }

    /// `σ_ξ² = ln(1 + (e^{4σ_x²} - 1)/(F·L))`.
    pub fn sigma_xi_sq(&self) -> f64 {
        self.sigma_xi_sq
    }

    pub fn sigma_xi(&self) -> f64 {
        self.sigma_xi_sq.sqrt()
    }

    /// `m_ξ = -σ_ξ²/2`.
    pub fn m_xi(&self) -> f64 {
        -0.5 * self.sigma_xi_sq
    }

    /// Moment-matched lognormal law of the combined intensity. For a 1×1
    /// link this is exactly the single-path law.
    pub fn log_normal(&self) -> LogNormal {
        if self.paths() == 1 {
            return self.path.log_normal();
        }
        LogNormal {
            mu: self.m_xi(),
            sigma: self.sigma_xi(),
        }
    }
}

/// A lognormal law, described by `ln I ~ N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNormal {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormal {
    /// Standardized log-intensity `(ln i - mu)/sigma`; `-∞` at `i = 0`.
    #[inline]
    pub fn standardize(&self, i: f64) -> f64 {
        (i.ln() - self.mu) / self.sigma
    }

    pub fn pdf(&self, i: f64) -> Result<f64> {
        check_intensity(i)?;
        Ok(normal_pdf(self.standardize(i)) / (i * self.sigma))
    }

    pub fn cdf(&self, i: f64) -> Result<f64> {
        check_intensity(i)?;
        Ok(q(-self.standardize(i)))
    }

    /// `P(I ≥ i)`, defined for `i ≥ 0` and `+∞`.
    pub(crate) fn survival(&self, i: f64) -> f64 {
        q(self.standardize(i))
    }

    /// `P(I < i)`, defined for `i ≥ 0` and `+∞`.
    pub(crate) fn survival_complement(&self, i: f64) -> f64 {
        q(-self.standardize(i))
    }
}

fn check_intensity(i: f64) -> Result<()> {
    if !(i > 0.0) || i.is_infinite() {
        return Err(Error::Domain(format!("intensity must be positive and finite, got {i}")));
    }
    Ok(())
}

/// The fading seen by the receiver's decision device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Fading {
    Siso(TurbulenceParams),
    Mimo(MimoConfig),
}

impl From<TurbulenceParams> for Fading {
    fn from(p: TurbulenceParams) -> Self {
        Fading::Siso(p)
    }
}

impl From<MimoConfig> for Fading {
    fn from(m: MimoConfig) -> Self {
        Fading::Mimo(m)
    }
}

impl Fading {
    /// Lognormal law used by the analytic routines.
    pub fn log_normal(&self) -> LogNormal {
        match self {
            Fading::Siso(p) => p.log_normal(),
            Fading::Mimo(m) => m.log_normal(),
        }
    }

    pub fn path(&self) -> TurbulenceParams {
        match self {
            Fading::Siso(p) => *p,
            Fading::Mimo(m) => m.path(),
        }
    }

    /// Number of paths averaged into the decision variable.
    pub fn paths(&self) -> u32 {
        match self {
            Fading::Siso(_) => 1,
            Fading::Mimo(m) => m.paths(),
        }
    }

    pub fn is_mimo(&self) -> bool {
        matches!(self, Fading::Mimo(_))
    }

    pub fn pdf(&self, i: f64) -> Result<f64> {
        self.log_normal().pdf(i)
    }

    pub fn cdf(&self, i: f64) -> Result<f64> {
        self.log_normal().cdf(i)
    }

    /// Draws one exact realization: a single path, or the arithmetic mean of
    /// `F·L` independent paths.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let path = self.path();
        let (mu, sigma) = (path.m_x(), path.sigma_x());
        let mut one = || {
            let z: f64 = rng.sample(StandardNormal);
            (2.0 * (mu + sigma * z)).exp()
        };
        match self.paths() {
            1 => one(),
            n => (0..n).map(|_| one()).sum::<f64>() / f64::from(n),
        }
    }
}

const SAMPLE_CHUNK: usize = 1 << 16;

/// Deterministic fading realizations for `seed`.
///
/// Samples are generated in fixed chunks, each from its own ChaCha stream,
/// so the output is the same for every execution strategy.
pub fn sample_fading(fading: &Fading, seed: u64, count: usize) -> Result<Vec<f64>> {
    sample_fading_with(fading, seed, count, Execution::default())
}

pub fn sample_fading_with(fading: &Fading, seed: u64, count: usize, exec: Execution) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts = map_indexed(chunks, exec, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
        (0..len).map(|_| fading.draw(&mut rng)).collect::<Vec<_>>()
    });
    Ok(parts.concat())
}
