//! Gauss-Bernoulli signals and the scalar denoisers shared by AMP, VAMP and
//! state evolution.
//!
//! Every denoiser works in the channel parametrization `r = x + τz`,
//! `z ~ N(0,1)`. The reported variance is `τ²·∂η/∂r`, which for the Bayes
//! denoiser is the posterior variance.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::rng::rng_from;

/// Gauss-Bernoulli signal `(1−ρ)δ₀ + ρN(0,1)` of dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
}

impl SignalModel {
    pub fn new(n: usize, rho: f64, seed: u64) -> Result<Self> {
        let m = Self { n, rho, seed };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("signal dimension n must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        Ok(())
    }

    pub fn sample(&self) -> Result<Vec<f64>> {
        sample_signal(self)
    }
}

/// Draws one signal. Each entry consumes a uniform draw, and a normal draw
/// only when it is nonzero.
pub fn sample_signal(model: &SignalModel) -> Result<Vec<f64>> {
    model.validate()?;
    let mut rng = rng_from(model.seed);
    Ok((0..model.n)
        .map(|_| {
            let u: f64 = rng.random();
            if u < model.rho {
                rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        })
        .collect())
}

/// `(sign(r)·max(|r|−θ, 0), 1{|r|>θ})`.
#[inline]
pub fn soft_threshold(r: f64, theta: f64) -> (f64, f64) {
    if r > theta {
        (r - theta, 1.0)
    } else if r < -theta {
        (r + theta, 1.0)
    } else {
        (0.0, 0.0)
    }
}

/// Posterior mean and variance of `x ~ (1−ρ)δ₀ + ρN(0,1)` given `r = x + τz`.
pub fn bayes_gb_denoise(r: f64, tau2: f64, rho: f64) -> Result<(f64, f64)> {
    ensure_finite("r", r)?;
    ensure_finite("tau2", tau2)?;
    if tau2 <= 0.0 {
        return Err(invalid(format!("tau2 must be positive, got {tau2}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1], got {rho}")));
    }
    Ok(BayesChannel::new(tau2, rho).eval(r))
}

/// Bayes Gauss-Bernoulli posterior at a fixed channel variance, with the
/// `r`-independent constants hoisted.
#[derive(Clone, Copy, Debug)]
pub struct BayesChannel {
    // log-odds of the slab at r = 0; +inf when ρ = 1
    base_log_odds: f64,
    // coefficient of r² in the log-odds
    quad: f64,
    shrink: f64,
    slab_var: f64,
}

impl BayesChannel {
    /// Unchecked; callers guarantee `tau2 > 0` and `0 < rho ≤ 1`.
    pub fn new(tau2: f64, rho: f64) -> Self {
        let v = 1.0 + tau2;
        let base_log_odds = if rho >= 1.0 {
            f64::INFINITY
        } else {
            (rho / (1.0 - rho)).ln() - 0.5 * (v / tau2).ln()
        };
        Self {
            base_log_odds,
            quad: 1.0 / (2.0 * tau2 * v),
            shrink: 1.0 / v,
            slab_var: tau2 / v,
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let m = r * self.shrink;
        let l = self.base_log_odds + self.quad * r * r;
        if l == f64::INFINITY {
            return (m, self.slab_var);
        }
        // π = σ(l) and π(1−π), without overflow for |l| large
        let e = (-l.abs()).exp();
        let d = 1.0 + e;
        let pi = if l >= 0.0 { 1.0 / d } else { e / d };
        let pq = e / (d * d);
        (pi * m, pi * self.slab_var + pq * m * m)
    }
}

/// Separable denoiser family.
///
/// The soft threshold is parametrized by its ratio `κ` to the channel noise
/// level, `θ = κτ`, because every caller scales it that way.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Denoiser {
    SoftThreshold { kappa: f64 },
    BayesGaussBernoulli { rho: f64 },
}

impl Denoiser {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Denoiser::SoftThreshold { kappa } => {
                if !(kappa.is_finite() && kappa >= 0.0) {
                    return Err(invalid(format!("kappa must be finite and >= 0, got {kappa}")));
                }
            }
            Denoiser::BayesGaussBernoulli { rho } => {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(invalid(format!("rho must lie in (0, 1], got {rho}")));
                }
            }
        }
        Ok(())
    }

    /// The denoiser specialized to channel variance `tau2 > 0`.
    pub fn at(&self, tau2: f64) -> ScalarChannel {
        match *self {
            Denoiser::SoftThreshold { kappa } => ScalarChannel::Soft {
                theta: kappa * tau2.sqrt(),
                tau2,
            },
            Denoiser::BayesGaussBernoulli { rho } => ScalarChannel::Bayes(BayesChannel::new(tau2, rho)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum ScalarChannel {
    Soft { theta: f64, tau2: f64 },
    Bayes(BayesChannel),
}

impl ScalarChannel {
    /// `(η(r), τ²·η′(r))`.
    #[inline]
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match self {
            ScalarChannel::Soft { theta, tau2 } => {
                let (e, d) = soft_threshold(r, *theta);
                (e, d * tau2)
            }
            ScalarChannel::Bayes(b) => b.eval(r),
        }
    }

    /// Denoises `r` into `out` and returns the averaged variance.
    pub fn apply(&self, r: &[f64], out: &mut [f64]) -> f64 {
        debug_assert_eq!(r.len(), out.len());
        let mut acc = 0.0;
        for (o, &ri) in out.iter_mut().zip(r) {
            let (e, v) = self.eval(ri);
            *o = e;
            acc += v;
        }
        acc / r.len() as f64
    }
}
