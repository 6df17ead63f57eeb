//! The scalar state-evolution map `Ψ(σ²) = E[(η(X + sZ) − X)²]`, `s² = σ²/α`.
//!
//! Conditioning on the observation `R = X + sZ` reduces the two-dimensional
//! expectation to one-dimensional integrals:
//!
//! ```text
//! Ψ = (1−ρ)·E_w[η(s·w)²] + ρ·( E_R[(η(R) − R/v)²] + s²/v ),   R ~ N(0, v), v = 1 + s²
//! ```
//!
//! since `E[X | R, X≠0] = R/v` and `Var[X | R, X≠0] = s²/v`. The soft
//! threshold has a closed form in terms of `erfc`, used by [`se_psi`]; the
//! quadrature route is always available through [`se_psi_with`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::denoise::Denoiser;
use crate::error::{ensure_finite, invalid, Result};
use crate::quadrature::QuadratureRule;

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn check(sigma2: f64, denoiser: &Denoiser, alpha: f64, rho_signal: f64) -> Result<()> {
    ensure_finite("sigma2", sigma2)?;
    ensure_finite("alpha", alpha)?;
    ensure_finite("rho_signal", rho_signal)?;
    if sigma2 < 0.0 {
        return Err(invalid(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    if alpha <= 0.0 {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(rho_signal > 0.0 && rho_signal <= 1.0) {
        return Err(invalid(format!("rho_signal must lie in (0, 1], got {rho_signal}")));
    }
    denoiser.validate()
}

/// `Ψ(σ²)`; closed form for the soft threshold, default quadrature for Bayes.
pub fn se_psi(sigma2: f64, denoiser: &Denoiser, alpha: f64, rho_signal: f64) -> Result<f64> {
    check(sigma2, denoiser, alpha, rho_signal)?;
    Ok(match *denoiser {
        Denoiser::SoftThreshold { kappa } => psi_soft_closed(sigma2 / alpha, kappa, rho_signal),
        Denoiser::BayesGaussBernoulli { .. } => psi_quadrature(sigma2 / alpha, denoiser, rho_signal, default_rule()),
    })
}

/// `Ψ(σ²)` by quadrature under `rule`, for either denoiser.
pub fn se_psi_with(
    sigma2: f64,
    denoiser: &Denoiser,
    alpha: f64,
    rho_signal: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    check(sigma2, denoiser, alpha, rho_signal)?;
    Ok(psi_quadrature(sigma2 / alpha, denoiser, rho_signal, rule))
}

pub(crate) fn default_rule() -> &'static QuadratureRule {
    static RULE: std::sync::OnceLock<QuadratureRule> = std::sync::OnceLock::new();
    RULE.get_or_init(QuadratureRule::default)
}

/// Unchecked quadrature evaluation at effective noise `s2 = σ²/α`.
pub(crate) fn psi_quadrature(s2: f64, denoiser: &Denoiser, rho: f64, rule: &QuadratureRule) -> f64 {
    if s2 == 0.0 {
        return 0.0;
    }
    let s = s2.sqrt();
    let v = 1.0 + s2;
    let sv = v.sqrt();
    let ch = denoiser.at(s2);
    let (zero_kinks, gauss_kinks, gauss_scale) = match *denoiser {
        Denoiser::SoftThreshold { kappa } => ([kappa], [kappa * s / sv], s / sv),
        Denoiser::BayesGaussBernoulli { rho } => {
            // responsibility switch at |R| = s·√(−2av)
            let a = if rho >= 1.0 {
                0.0
            } else {
                (rho / (1.0 - rho)).ln() - 0.5 * (v / s2).ln()
            };
            let (w, g) = if a < 0.0 {
                ((-2.0 * a * v).sqrt(), s * (-2.0 * a).sqrt())
            } else {
                (0.0, 0.0)
            };
            ([w], [g], s / sv)
        }
    };
    let zero = if rho < 1.0 {
        rule.expect_even(
            |w| {
                let e = ch.eval(s * w).0;
                e * e
            },
            1.0,
            &zero_kinks,
        )
    } else {
        0.0
    };
    let gauss = rule.expect_even(
        |g| {
            let r = sv * g;
            let d = ch.eval(r).0 - r / v;
            d * d
        },
        gauss_scale,
        &gauss_kinks,
    );
    (1.0 - rho) * zero + rho * (gauss + s2 / v)
}

/// Closed form for the soft threshold `θ = κ·s`.
pub(crate) fn psi_soft_closed(s2: f64, kappa: f64, rho: f64) -> f64 {
    if s2 == 0.0 {
        return 0.0;
    }
    let s = s2.sqrt();
    let v = 1.0 + s2;
    let sv = v.sqrt();
    let zero = s2 * 2.0 * ((1.0 + kappa * kappa) * norm_cdf(-kappa) - kappa * norm_pdf(kappa));
    let theta = kappa * s;
    let t = theta / sv;
    let a = s2 / sv;
    let (pt, ct, cmt) = (norm_pdf(t), norm_cdf(t), norm_cdf(-t));
    let inner = 2.0 * truncated_second_moment(t, ct, pt) / v;
    let outer = 2.0 * (a * a * (t * pt + cmt) - 2.0 * a * theta * pt + theta * theta * cmt);
    (1.0 - rho) * zero + rho * (inner + outer + s2 / v)
}

/// `∫₀ᵗ g²φ(g) dg`; a series below `t = 0.5` avoids the `O(t³)` cancellation.
fn truncated_second_moment(t: f64, cdf_t: f64, pdf_t: f64) -> f64 {
    if t >= 0.5 {
        return cdf_t - 0.5 - t * pdf_t;
    }
    let t2 = t * t;
    let mut term = t * t2;
    let mut sum = 0.0;
    for k in 0..20 {
        let c = term / (2 * k + 3) as f64;
        sum += c;
        if c.abs() < 1e-18 * sum.abs() {
            break;
        }
        term *= -t2 / (2.0 * (k + 1) as f64);
    }
    sum / (2.0 * PI).sqrt()
}
