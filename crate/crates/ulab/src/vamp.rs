//! Vector AMP: an LMMSE half-step on the linear channel and a separable
//! denoiser half-step, exchanging Gaussian messages `(u, ρ)` with mean
//! `u/ρ` and precision `ρ`.
//!
//! With `Φ = U·diag(s)·Vt` (`Vt` has `k` orthonormal rows) the LMMSE solve
//! `(ΦᵀΦ + Δρ_r I)⁻¹(Φᵀy + Δu_r)` is diagonal in the row space of `Vt` and
//! equals `u_r/ρ_r` on its complement:
//!
//! ```text
//! x̂_l = Vtᵀ[(s⊙ỹ + Δw)/(s² + Δρ_r) − w/ρ_r] + u_r/ρ_r,   w = Vt·u_r, ỹ = Uᵀy
//! var_l = (1/n)·[Σᵢ Δ/(sᵢ² + Δρ_r) + (n − k)/ρ_r]
//! ```
//!
//! which keeps the `Δ → 0` limit free of cancellation.

use serde::{Deserialize, Serialize};

use crate::amp::check_problem;
use crate::denoise::{BayesChannel, Denoiser};
use crate::ensembles::{stieltjes, MeasurementOperator, Spectrum, SvdBundle};
use crate::error::{ensure_finite, ensure_finite_slice, invalid, Error, Result};
use crate::se::se_psi;
use crate::trajectory::{dist, mse, norm, Guard, IterRecord, Status, Trajectory};

/// Soft-threshold ratio used by ℓ1 VAMP.
pub const DEFAULT_VAMP_KAPPA: f64 = 1.0;

/// `Δ = DELTA_SCALE·‖y‖²/m` when no explicit `Δ` is configured.
pub const DELTA_SCALE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VampMode {
    /// Soft threshold `θ = κ/√ρ_l`; its fixed points are basis-pursuit KKT points.
    L1 { kappa: f64 },
    /// Bayes Gauss-Bernoulli posterior with prior sparsity `rho`.
    Bayes { rho: f64 },
}

impl VampMode {
    pub fn l1() -> Self {
        VampMode::L1 {
            kappa: DEFAULT_VAMP_KAPPA,
        }
    }

    pub fn denoiser(&self) -> Denoiser {
        match *self {
            VampMode::L1 { kappa } => Denoiser::SoftThreshold { kappa },
            VampMode::Bayes { rho } => Denoiser::BayesGaussBernoulli { rho },
        }
    }

    /// Prior variance used for the first LMMSE half-step.
    fn prior_variance(&self) -> f64 {
        match *self {
            VampMode::L1 { .. } => 1.0,
            VampMode::Bayes { rho } => rho,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VampConfig {
    pub max_iter: usize,
    /// Stop when `‖x̂ᵗ⁺¹ − x̂ᵗ‖ < tol·‖x̂ᵗ⁺¹‖`.
    pub tol: f64,
    /// Message damping `γ ∈ (0, 1]`; 1 is undamped.
    pub damping: f64,
    /// Regularization noise; `None` means `DELTA_SCALE·‖y‖²/m`.
    pub delta: Option<f64>,
    pub rho_floor: f64,
    pub mode: VampMode,
    pub seed: u64,
}

impl Default for VampConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-8,
            damping: 1.0,
            delta: None,
            rho_floor: 1e-12,
            mode: VampMode::l1(),
            seed: 0,
        }
    }
}

impl VampConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(format!("delta must be positive, got {d}")));
            }
        }
        if !(self.rho_floor > 0.0) {
            return Err(invalid(format!("rho_floor must be positive, got {}", self.rho_floor)));
        }
        self.mode.denoiser().validate()
    }
}

/// Messages and estimates after a full iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct VampState {
    pub u_l: Vec<f64>,
    pub u_r: Vec<f64>,
    pub rho_l: f64,
    pub rho_r: f64,
    pub x_hat_l: Vec<f64>,
    pub x_hat_r: Vec<f64>,
    pub var_l: f64,
    pub var_r: f64,
}

/// LMMSE half-step with `ỹ = Uᵀy` precomputed.
struct Lmmse<'a> {
    svd: &'a SvdBundle,
    yt: Vec<f64>,
    sy: Vec<f64>,
    s2: Vec<f64>,
    w: Vec<f64>,
    coef: Vec<f64>,
}

impl<'a> Lmmse<'a> {
    fn new(svd: &'a SvdBundle, y: &[f64]) -> Self {
        let yt = svd.apply_ut(y);
        let sy = yt.iter().zip(svd.s()).map(|(a, s)| a * s).collect();
        let s2: Vec<f64> = svd.s().iter().map(|s| s * s).collect();
        let k = s2.len();
        Self {
            svd,
            yt,
            sy,
            s2,
            w: vec![0.0; k],
            coef: vec![0.0; k],
        }
    }

    fn step(&mut self, u_r: &[f64], rho_r: f64, delta: f64, out: &mut [f64]) -> f64 {
        let vt = self.svd.vt();
        let n = vt.n();
        let k = self.s2.len();
        vt.apply_into(u_r, &mut self.w);
        let c = delta * rho_r;
        let mut trace = 0.0;
        for i in 0..k {
            let d = self.s2[i] + c;
            self.coef[i] = (self.sy[i] + delta * self.w[i]) / d - self.w[i] / rho_r;
            trace += delta / d;
        }
        vt.apply_adjoint_into(&self.coef, out);
        for (o, u) in out.iter_mut().zip(u_r) {
            *o += u / rho_r;
        }
        (trace + (n - k) as f64 / rho_r) / n as f64
    }
}

/// One LMMSE half-step: `(x̂_l, var_l)`.
pub fn lmmse_step(svd: &SvdBundle, y: &[f64], u_r: &[f64], rho_r: f64, delta: f64) -> Result<(Vec<f64>, f64)> {
    if y.len() != svd.m() || u_r.len() != svd.n() {
        return Err(Error::DimensionMismatch(format!(
            "lmmse_step on a {}x{} system got y of length {} and u_r of length {}",
            svd.m(),
            svd.n(),
            y.len(),
            u_r.len()
        )));
    }
    ensure_finite_slice("y", y)?;
    ensure_finite_slice("u_r", u_r)?;
    ensure_finite("rho_r", rho_r)?;
    ensure_finite("delta", delta)?;
    if !(rho_r > 0.0 && delta > 0.0) {
        return Err(invalid("lmmse_step needs rho_r > 0 and delta > 0"));
    }
    let mut out = vec![0.0; svd.n()];
    let var = Lmmse::new(svd, y).step(u_r, rho_r, delta, &mut out);
    Ok((out, var))
}

/// `theta`, raised if needed so that at most `max_active` entries of `r`
/// exceed it. A basic basis-pursuit solution has at most rank(Φ) nonzeros; at
/// a noiseless fixed point the active fraction equals α, which a bare `κτ`
/// threshold cannot reach when α is below the fraction of pure noise it lets
/// through, and the precisions then decay without bound.
fn sparsity_capped_threshold(r: &[f64], theta: f64, max_active: usize) -> f64 {
    if max_active >= r.len() || r.iter().filter(|v| v.abs() > theta).count() <= max_active {
        return theta;
    }
    let mut mags: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    // the (max_active + 1)-th largest magnitude
    let k = r.len() - 1 - max_active;
    let (_, kth, _) = mags.select_nth_unstable_by(k, f64::total_cmp);
    *kth
}

fn denoise_into(u_l: &[f64], rho_l: f64, mode: &VampMode, max_active: usize, r: &mut [f64], out: &mut [f64]) -> f64 {
    let n = u_l.len();
    for (ri, u) in r.iter_mut().zip(u_l) {
        *ri = u / rho_l;
    }
    let tau2 = 1.0 / rho_l;
    // average derivative of the denoiser
    let avg = match *mode {
        VampMode::Bayes { rho } => {
            let ch = BayesChannel::new(tau2, rho);
            let mut acc = 0.0;
            for (o, &ri) in out.iter_mut().zip(r.iter()) {
                let (e, v) = ch.eval(ri);
                *o = e;
                acc += v;
            }
            acc / n as f64 / tau2
        }
        VampMode::L1 { kappa } => {
            let theta = sparsity_capped_threshold(r, kappa * tau2.sqrt(), max_active);
            Denoiser::SoftThreshold {
                kappa: theta / tau2.sqrt(),
            }
            .at(tau2)
            .apply(r, out)
                / tau2
        }
    };
    // The extrinsic precision is rho_l (1/avg - 1). On a finite sample avg can
    // hit 0 (nothing active) or 1 (everything active, or a Bayes posterior
    // wider than its input); one coordinate's worth of margin on either side
    // keeps it positive and finite.
    let lo = 1.0 / n as f64;
    avg.clamp(lo, 1.0 - lo) * tau2
}

/// One denoiser half-step: `(x̂_r, var_r)`. In ℓ1 mode at most `max_active`
/// coordinates stay nonzero; the solver passes the rank of `Φ`.
pub fn denoise_step(u_l: &[f64], rho_l: f64, mode: &VampMode, max_active: usize) -> Result<(Vec<f64>, f64)> {
    ensure_finite_slice("u_l", u_l)?;
    ensure_finite("rho_l", rho_l)?;
    if !(rho_l > 0.0) {
        return Err(invalid(format!("rho_l must be positive, got {rho_l}")));
    }
    if u_l.is_empty() {
        return Err(invalid("denoise_step needs a nonempty message"));
    }
    mode.denoiser().validate()?;
    let mut r = vec![0.0; u_l.len()];
    let mut out = vec![0.0; u_l.len()];
    let var = denoise_into(u_l, rho_l, mode, max_active, &mut r, &mut out);
    Ok((out, var))
}

/// Decomposes `op` and runs [`vamp_solve_svd`].
pub fn vamp_solve(op: &MeasurementOperator, y: &[f64], cfg: &VampConfig, truth: Option<&[f64]>) -> Result<Trajectory> {
    cfg.validate()?;
    check_problem(op, y, truth)?;
    let svd = SvdBundle::compute(op)?;
    vamp_solve_svd(&svd, y, cfg, truth)
}

/// VAMP on a precomputed decomposition.
pub fn vamp_solve_svd(svd: &SvdBundle, y: &[f64], cfg: &VampConfig, truth: Option<&[f64]>) -> Result<Trajectory> {
    let mut solver = VampSolver::new(svd, y, cfg, truth)?;
    solver.run();
    Ok(solver.into_trajectory())
}

/// Resumable VAMP iteration.
pub struct VampSolver<'a> {
    cfg: VampConfig,
    truth: Option<&'a [f64]>,
    lmmse: Lmmse<'a>,
    delta: f64,
    resid_perp_sq: f64,
    state: VampState,
    started: bool,
    guard: Guard,
    records: Vec<IterRecord>,
    status: Option<Status>,
    scratch_r: Vec<f64>,
    scratch_x: Vec<f64>,
    vx: Vec<f64>,
}

impl<'a> VampSolver<'a> {
    pub fn new(svd: &'a SvdBundle, y: &[f64], cfg: &VampConfig, truth: Option<&'a [f64]>) -> Result<Self> {
        cfg.validate()?;
        let (m, n) = (svd.m(), svd.n());
        if y.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "y has length {}, operator has {m} rows",
                y.len()
            )));
        }
        ensure_finite_slice("y", y)?;
        if let Some(t) = truth {
            if t.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "truth has length {}, operator has {n} columns",
                    t.len()
                )));
            }
        }
        let y_sq: f64 = y.iter().map(|v| v * v).sum();
        let delta = cfg
            .delta
            .unwrap_or_else(|| (DELTA_SCALE * y_sq / m as f64).max(f64::MIN_POSITIVE));
        let lmmse = Lmmse::new(svd, y);
        let range_sq: f64 = lmmse.yt.iter().map(|a| a * a).sum();
        let first = IterRecord {
            iter: 0,
            mse: truth.map(|t| mse(&vec![0.0; n], t)),
            residual_norm: y_sq.sqrt(),
            tau2: cfg.mode.prior_variance(),
        };
        let state = VampState {
            u_l: vec![0.0; n],
            u_r: vec![0.0; n],
            rho_l: 0.0,
            rho_r: 1.0 / cfg.mode.prior_variance(),
            x_hat_l: vec![0.0; n],
            x_hat_r: vec![0.0; n],
            var_l: 0.0,
            var_r: cfg.mode.prior_variance(),
        };
        Ok(Self {
            cfg: *cfg,
            truth,
            delta,
            // part of y outside range(U)
            resid_perp_sq: (y_sq - range_sq).max(0.0),
            lmmse,
            state,
            started: false,
            guard: Guard::new(&first),
            records: vec![first],
            status: if y_sq == 0.0 { Some(Status::Converged) } else { None },
            scratch_r: vec![0.0; n],
            scratch_x: vec![0.0; n],
            vx: vec![0.0; svd.s().len()],
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn state(&self) -> &VampState {
        &self.state
    }

    pub fn records(&self) -> &[IterRecord] {
        &self.records
    }

    pub fn status(&self) -> Option<Status> {
        self.status
    }

    /// `‖y − Φx‖` through the decomposition.
    fn residual(&mut self, x: &[f64]) -> f64 {
        let svd = self.lmmse.svd;
        svd.vt().apply_into(x, &mut self.vx);
        let inside: f64 = self
            .lmmse
            .yt
            .iter()
            .zip(svd.s())
            .zip(&self.vx)
            .map(|((yt, s), v)| {
                let d = yt - s * v;
                d * d
            })
            .sum();
        (inside + self.resid_perp_sq).sqrt()
    }

    /// One full iteration; returns the relative change of `x̂_r`.
    pub fn step(&mut self) -> f64 {
        let gamma = if self.started { self.cfg.damping } else { 1.0 };
        let floor = self.cfg.rho_floor;
        let n = self.state.u_l.len();
        let st = &mut self.state;

        st.var_l = self.lmmse.step(&st.u_r, st.rho_r, self.delta, &mut st.x_hat_l);
        let rho_l_new = 1.0 / st.var_l - st.rho_r;
        st.rho_l = ((1.0 - gamma) * st.rho_l + gamma * rho_l_new).max(floor);
        for i in 0..n {
            let u = st.x_hat_l[i] / st.var_l - st.u_r[i];
            st.u_l[i] = (1.0 - gamma) * st.u_l[i] + gamma * u;
        }

        st.var_r = denoise_into(
            &st.u_l,
            st.rho_l,
            &self.cfg.mode,
            self.lmmse.s2.len(),
            &mut self.scratch_r,
            &mut self.scratch_x,
        );
        let rho_r_new = 1.0 / st.var_r - st.rho_l;
        st.rho_r = ((1.0 - gamma) * st.rho_r + gamma * rho_r_new).max(floor);
        for i in 0..n {
            let u = self.scratch_x[i] / st.var_r - st.u_l[i];
            st.u_r[i] = (1.0 - gamma) * st.u_r[i] + gamma * u;
        }
        self.started = true;

        let change = dist(&self.scratch_x, &st.x_hat_r);
        let size = norm(&self.scratch_x);
        std::mem::swap(&mut st.x_hat_r, &mut self.scratch_x);
        if size > 0.0 {
            change / size
        } else if change == 0.0 {
            0.0
        } else {
            // moved to the zero estimate
            1.0
        }
    }

    /// Iterates until a terminal status.
    pub fn run(&mut self) {
        while self.status.is_none() {
            let rel = self.step();
            let x = std::mem::take(&mut self.state.x_hat_r);
            let rec = IterRecord {
                iter: self.records.len(),
                mse: self.truth.map(|t| mse(&x, t)),
                residual_norm: self.residual(&x),
                tau2: 1.0 / self.state.rho_l,
            };
            self.state.x_hat_r = x;
            let finite = self.state.rho_l.is_finite() && self.state.rho_r.is_finite() && rel.is_finite();
            let tripped = self.guard.tripped(&rec) || !finite;
            self.records.push(rec);
            if tripped {
                self.status = Some(Status::Diverged);
            } else if rel < self.cfg.tol {
                self.status = Some(Status::Converged);
            } else if self.records.len() > self.cfg.max_iter {
                self.status = Some(Status::MaxIter);
            }
        }
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            records: self.records,
            status: self.status.unwrap_or(Status::MaxIter),
            final_estimate: self.state.x_hat_r,
        }
    }
}

/// One step of the VAMP state evolution: `σ = Ψ(1/ρ_l)` and
/// `ε = Δ·S(−Δρ_r)`, or `(1−α)/ρ_r` under `noiseless`.
#[allow(clippy::too_many_arguments)]
pub fn vamp_se_step(
    rho_l: f64,
    rho_r: f64,
    spectrum: &Spectrum,
    delta: f64,
    denoiser: &Denoiser,
    alpha: f64,
    rho_signal: f64,
    noiseless: bool,
) -> Result<(f64, f64)> {
    if !(rho_l > 0.0 && rho_r > 0.0) {
        return Err(invalid("vamp_se_step needs positive precisions"));
    }
    let sigma = se_psi(1.0 / rho_l, denoiser, 1.0, rho_signal)?;
    let eps = if noiseless {
        (1.0 - alpha).max(0.0) / rho_r
    } else {
        delta * stieltjes(spectrum, -delta * rho_r)?
    };
    Ok((sigma, eps))
}

/// Predicted MSE of `x̂_r` per iteration, from `ρ_r = 1/ρ_signal`.
#[allow(clippy::too_many_arguments)]
pub fn vamp_state_evolution(
    spectrum: &Spectrum,
    delta: f64,
    denoiser: &Denoiser,
    alpha: f64,
    rho_signal: f64,
    noiseless: bool,
    max_iter: usize,
    rho_floor: f64,
) -> Result<Vec<f64>> {
    let mut rho_r = 1.0 / rho_signal;
    let mut out = Vec::new();
    for _ in 0..max_iter {
        let eps = if noiseless {
            (1.0 - alpha).max(0.0) / rho_r
        } else {
            delta * stieltjes(spectrum, -delta * rho_r)?
        };
        if eps <= 0.0 {
            out.push(0.0);
            break;
        }
        let rho_l = (1.0 / eps - rho_r).max(rho_floor);
        let sigma = se_psi(1.0 / rho_l, denoiser, 1.0, rho_signal)?;
        out.push(sigma);
        if sigma < 1e-14 {
            break;
        }
        let next = (1.0 / sigma - rho_l).max(rho_floor);
        if out.len() > 1 && (out[out.len() - 2] - sigma).abs() <= 1e-12 * sigma {
            break;
        }
        rho_r = next;
    }
    Ok(out)
}
