//! Approximate message passing with the Onsager correction.
//!
//! ```text
//! x̂ᵗ⁺¹ = η_t(Aᵀzᵗ + x̂ᵗ)
//! zᵗ⁺¹ = y − A·x̂ᵗ⁺¹ + (1/α)·zᵗ·⟨η′_t⟩
//! ```
//!
//! from `x̂⁰ = 0`, `z⁰ = y`, with channel variance `τ̂² = ‖zᵗ‖²/m`. The
//! recursion presumes unit-norm columns, so `Φ` and `y` enter rescaled by
//! `√(‖Φ‖_F²/n)`; the solution set is unchanged.

use serde::{Deserialize, Serialize};

use crate::denoise::Denoiser;
use crate::ensembles::{gaussianize, whiten_with, MeasurementOperator, SvdBundle};
use crate::error::{ensure_finite_slice, invalid, Error, Result};
use crate::rng::{derive, stream};
use crate::trajectory::{dist, mse, norm, Guard, IterRecord, Status, Trajectory};

/// Minimax soft-threshold ratio at `ρ = 0.1`.
pub const DEFAULT_KAPPA: f64 = 1.1403;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmpMode {
    /// Soft threshold `θ_t = κ·τ̂_t`.
    L1,
    /// Bayes Gauss-Bernoulli posterior mean with prior sparsity `rho`.
    Bayes { rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmpConfig {
    pub max_iter: usize,
    /// Stop when `‖x̂ᵗ⁺¹ − x̂ᵗ‖ < tol·‖x̂ᵗ⁺¹‖`.
    pub tol: f64,
    pub threshold_kappa: f64,
    pub mode: AmpMode,
    /// Drives the Gaussianizing draw of [`amp_solve_with_trick`].
    pub seed: u64,
    /// Keep the Onsager term; switching it off gives plain iterative thresholding.
    pub onsager: bool,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-8,
            threshold_kappa: DEFAULT_KAPPA,
            mode: AmpMode::L1,
            seed: 0,
            onsager: true,
        }
    }
}

impl AmpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.threshold_kappa > 0.0 && self.threshold_kappa.is_finite()) {
            return Err(invalid(format!(
                "threshold_kappa must be positive, got {}",
                self.threshold_kappa
            )));
        }
        self.denoiser().validate()
    }

    pub fn denoiser(&self) -> Denoiser {
        match self.mode {
            AmpMode::L1 => Denoiser::SoftThreshold {
                kappa: self.threshold_kappa,
            },
            AmpMode::Bayes { rho } => Denoiser::BayesGaussBernoulli { rho },
        }
    }
}

pub(crate) fn check_problem(op: &MeasurementOperator, y: &[f64], truth: Option<&[f64]>) -> Result<()> {
    if y.len() != op.m() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, operator has {} rows",
            y.len(),
            op.m()
        )));
    }
    ensure_finite_slice("y", y)?;
    if let Some(t) = truth {
        if t.len() != op.n() {
            return Err(Error::DimensionMismatch(format!(
                "truth has length {}, operator has {} columns",
                t.len(),
                op.n()
            )));
        }
        ensure_finite_slice("truth", t)?;
    }
    Ok(())
}

pub fn amp_solve(op: &MeasurementOperator, y: &[f64], cfg: &AmpConfig, truth: Option<&[f64]>) -> Result<Trajectory> {
    cfg.validate()?;
    check_problem(op, y, truth)?;
    let alpha = op.alpha();
    if alpha > 1.0 {
        return Err(invalid(format!("AMP needs m <= n, got alpha = {alpha}")));
    }
    let (m, n) = (op.m(), op.n());
    let scale = (op.frobenius_sq() / n as f64).sqrt();
    if !(scale > 0.0) {
        return Err(invalid("operator is identically zero"));
    }
    let inv = scale.recip();
    let ys: Vec<f64> = y.iter().map(|v| v * inv).collect();
    let denoiser = cfg.denoiser();

    let mut x = vec![0.0; n];
    let mut z = ys.clone();
    let record = |iter: usize, x: &[f64], res: f64, tau2: f64| IterRecord {
        iter,
        mse: truth.map(|t| mse(x, t)),
        residual_norm: res,
        tau2,
    };
    let first = record(0, &x, norm(y), norm(&z).powi(2) / m as f64);
    let guard = Guard::new(&first);
    let mut records = vec![first];
    if norm(y) == 0.0 {
        return Ok(Trajectory {
            records,
            status: Status::Converged,
            final_estimate: x,
        });
    }

    let mut r = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut status = Status::MaxIter;
    for t in 1..=cfg.max_iter {
        let tau2 = norm(&z).powi(2) / m as f64;
        if tau2 == 0.0 {
            status = Status::Converged;
            break;
        }
        op.apply_adjoint_into(&z, &mut r);
        for (ri, xi) in r.iter_mut().zip(&x) {
            *ri = *ri * inv + xi;
        }
        let ch = denoiser.at(tau2);
        let avg_var = ch.apply(&r, &mut x_new);
        let deriv = avg_var / tau2;
        op.apply_into(&x_new, &mut ax);
        let mut res = 0.0;
        for i in 0..m {
            let resid = ys[i] - ax[i] * inv;
            res += resid * resid;
            z[i] = resid + if cfg.onsager { z[i] * deriv / alpha } else { 0.0 };
        }
        let change = dist(&x_new, &x);
        let size = norm(&x_new);
        std::mem::swap(&mut x, &mut x_new);
        let rec = record(t, &x, res.sqrt() * scale, tau2);
        let tripped = guard.tripped(&rec);
        records.push(rec);
        if tripped {
            status = Status::Diverged;
            break;
        }
        if change <= cfg.tol * size {
            status = Status::Converged;
            break;
        }
    }
    Ok(Trajectory {
        records,
        status,
        final_estimate: x,
    })
}

/// AMP on the Gaussianized system `(U₀Σ₀Vt, U₀Σ₀ỹ)`; the trajectory's MSE
/// is still measured against `truth`.
pub fn amp_solve_with_trick(
    op: &MeasurementOperator,
    y: &[f64],
    cfg: &AmpConfig,
    truth: Option<&[f64]>,
) -> Result<Trajectory> {
    check_problem(op, y, truth)?;
    let svd = SvdBundle::compute(op)?;
    amp_solve_with_trick_svd(&svd, y, cfg, truth)
}

/// [`amp_solve_with_trick`] reusing a decomposition.
pub fn amp_solve_with_trick_svd(
    svd: &SvdBundle,
    y: &[f64],
    cfg: &AmpConfig,
    truth: Option<&[f64]>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let wp = whiten_with(svd, y)?;
    let g = gaussianize(&wp, derive(cfg.seed, stream::GAUSSIANIZE))?;
    amp_solve(&g.operator, &g.observations, cfg, truth)
}
