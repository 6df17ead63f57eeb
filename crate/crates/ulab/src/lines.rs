//! Theoretical transition lines from the scalar state evolution.
//!
//! `α_c(ρ)` is the smallest `α` at which `σ²_{t+1} = Ψ(σ²_t)`, started at
//! `σ₀² = ρ`, is driven to zero: with the Bayes denoiser this is the hard
//! line, with the soft threshold (best `κ` on a grid) the Donoho–Tanner line.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::Denoiser;
use crate::error::{invalid, Error, Result};
use crate::format::fmt_g6;
use crate::quadrature::QuadratureRule;
use crate::se::{psi_quadrature, psi_soft_closed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineMethod {
    DonohoTanner,
    BayesHard,
}

impl fmt::Display for LineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineMethod::DonohoTanner => "dt",
            LineMethod::BayesHard => "bayes",
        })
    }
}

impl FromStr for LineMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" | "donoho-tanner" | "l1" => Ok(LineMethod::DonohoTanner),
            "bayes" | "bayes-hard" => Ok(LineMethod::BayesHard),
            other => Err(invalid(format!("unknown line method '{other}' (expected dt or bayes)"))),
        }
    }
}

/// Which denoiser drives the recursion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DenoiserPolicy {
    /// Soft threshold, converging if any `κ` of the grid converges.
    L1Optimized,
    L1Fixed {
        kappa: f64,
    },
    /// Bayes denoiser matched to the signal sparsity.
    Bayes,
}

/// Numerical settings of the recursion and the bisection.
#[derive(Clone, Debug)]
pub struct SeSettings {
    pub max_iter: usize,
    /// `σ²` below which the recursion counts as converged.
    pub threshold: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub kappa_step: f64,
    pub bisection_tol: f64,
    pub quadrature: QuadratureRule,
}

impl Default for SeSettings {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            threshold: 1e-12,
            kappa_min: 0.01,
            kappa_max: 3.0,
            kappa_step: 0.01,
            bisection_tol: 1e-3,
            quadrature: QuadratureRule::default(),
        }
    }
}

impl SeSettings {
    /// Twice the iteration budget and a refined quadrature rule.
    pub fn refined(&self) -> Self {
        Self {
            max_iter: 2 * self.max_iter,
            quadrature: self.quadrature.refined(),
            ..self.clone()
        }
    }

    pub fn kappa_grid(&self) -> Vec<f64> {
        let count = ((self.kappa_max - self.kappa_min) / self.kappa_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.kappa_min + i as f64 * self.kappa_step)
            .collect()
    }
}

/// Outcome of one recursion.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Run {
    converged: bool,
    iterations: usize,
    last: f64,
}

// Ψ is nondecreasing with Ψ(0) = 0, so the iterate reaches zero iff no fixed
// point lies between zero and the current iterate.
fn iterate(rho: f64, psi: impl Fn(f64) -> f64, settings: &SeSettings) -> Run {
    let mut s = rho;
    for t in 0..settings.max_iter {
        if s < settings.threshold {
            return Run {
                converged: true,
                iterations: t,
                last: s,
            };
        }
        let next = psi(s);
        if !(next < s * (1.0 - 1e-14)) {
            return Run {
                converged: false,
                iterations: t,
                last: s,
            };
        }
        s = next;
    }
    if s < settings.threshold {
        return Run {
            converged: true,
            iterations: settings.max_iter,
            last: s,
        };
    }
    // budget exhausted: look for a fixed point below the iterate
    let decades = (s / settings.threshold).log10();
    let steps = (decades * 64.0).ceil().max(1.0) as usize;
    let ratio = (settings.threshold / s).powf(1.0 / steps as f64);
    let mut probe = s;
    for _ in 0..steps {
        probe *= ratio;
        if psi(probe) >= probe {
            return Run {
                converged: false,
                iterations: settings.max_iter,
                last: s,
            };
        }
    }
    Run {
        converged: true,
        iterations: settings.max_iter,
        last: s,
    }
}

fn run_fixed(alpha: f64, rho: f64, denoiser: &Denoiser, settings: &SeSettings) -> Run {
    match *denoiser {
        Denoiser::SoftThreshold { kappa } => iterate(rho, |s| psi_soft_closed(s / alpha, kappa, rho), settings),
        Denoiser::BayesGaussBernoulli { .. } => iterate(
            rho,
            |s| psi_quadrature(s / alpha, denoiser, rho, &settings.quadrature),
            settings,
        ),
    }
}

/// Whether the recursion at `(α, ρ)` reaches `σ² < 1e-12`.
pub fn se_converges(alpha: f64, rho: f64, policy: DenoiserPolicy) -> bool {
    se_converges_with(alpha, rho, policy, &SeSettings::default())
}

pub fn se_converges_with(alpha: f64, rho: f64, policy: DenoiserPolicy, settings: &SeSettings) -> bool {
    if !(alpha > 0.0 && rho > 0.0 && rho < 1.0 && alpha.is_finite()) {
        return false;
    }
    match policy {
        DenoiserPolicy::Bayes => run_fixed(alpha, rho, &Denoiser::BayesGaussBernoulli { rho }, settings).converged,
        DenoiserPolicy::L1Fixed { kappa } => {
            run_fixed(alpha, rho, &Denoiser::SoftThreshold { kappa }, settings).converged
        }
        DenoiserPolicy::L1Optimized => settings
            .kappa_grid()
            .into_iter()
            .any(|kappa| run_fixed(alpha, rho, &Denoiser::SoftThreshold { kappa }, settings).converged),
    }
}

/// Soft-threshold ratio for AMP at `(α, ρ)`: the grid `κ` converging in the
/// fewest iterations, else the one with the smallest final `σ²`.
pub fn tuned_kappa(alpha: f64, rho: f64, settings: &SeSettings) -> f64 {
    let mut best: Option<(bool, usize, f64, f64)> = None;
    for kappa in settings.kappa_grid() {
        let r = run_fixed(alpha, rho, &Denoiser::SoftThreshold { kappa }, settings);
        let better = match best {
            None => true,
            Some((conv, it, last, _)) => match (r.converged, conv) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => r.iterations < it,
                (false, false) => r.last < last,
            },
        };
        if better {
            best = Some((r.converged, r.iterations, r.last, kappa));
        }
    }
    best.map(|b| b.3).unwrap_or(crate::amp::DEFAULT_KAPPA)
}

fn policy_for(method: LineMethod) -> DenoiserPolicy {
    match method {
        LineMethod::DonohoTanner => DenoiserPolicy::L1Optimized,
        LineMethod::BayesHard => DenoiserPolicy::Bayes,
    }
}

/// Critical `α` by bisection on `(ρ, 1)`.
pub fn critical_alpha(rho: f64, method: LineMethod) -> Result<f64> {
    critical_alpha_with(rho, method, &SeSettings::default())
}

pub fn critical_alpha_with(rho: f64, method: LineMethod, settings: &SeSettings) -> Result<f64> {
    if !(rho > 0.02 && rho < 0.98) {
        return Err(invalid(format!("critical_alpha needs rho in (0.02, 0.98), got {rho}")));
    }
    let policy = policy_for(method);
    let (mut lo, mut hi) = (rho, 1.0 - 1e-9);
    let ok = |a: f64| se_converges_with(a, rho, policy, settings);
    if ok(lo) || !ok(hi) {
        return Err(Error::NoSignChange(format!(
            "state evolution for {method} at rho={rho} does not change verdict on ({rho}, 1)"
        )));
    }
    while hi - lo > settings.bisection_tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub rho: f64,
    pub alpha_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLine {
    pub method: LineMethod,
    pub points: Vec<LinePoint>,
    pub bisection_tol: f64,
    pub se_budget: usize,
}

/// Critical points at each `ρ`, computed in parallel.
pub fn phase_line(method: LineMethod, rhos: &[f64], settings: &SeSettings) -> Result<PhaseLine> {
    let points = rhos
        .par_iter()
        .map(|&rho| critical_alpha_with(rho, method, settings).map(|alpha_c| LinePoint { rho, alpha_c }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseLine {
        method,
        points,
        bisection_tol: settings.bisection_tol,
        se_budget: settings.max_iter,
    })
}

pub const LINES_HEADER: &str = "method,rho,alpha_c";

impl PhaseLine {
    /// `α_c` at `ρ` by linear interpolation; `None` outside the tabulated range.
    pub fn alpha_at(&self, rho: f64) -> Option<f64> {
        let p = &self.points;
        if p.is_empty() {
            return None;
        }
        for w in p.windows(2) {
            if (w[0].rho..=w[1].rho).contains(&rho) {
                let t = (rho - w[0].rho) / (w[1].rho - w[0].rho);
                return Some(w[0].alpha_c + t * (w[1].alpha_c - w[0].alpha_c));
            }
        }
        p.iter().find(|q| q.rho == rho).map(|q| q.alpha_c)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| format!("{},{},{}", self.method, fmt_g6(p.rho), fmt_g6(p.alpha_c)))
            .collect()
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{LINES_HEADER}")?;
        for row in self.csv_rows() {
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Reads lines written by [`PhaseLine::write_csv`]; one entry per method.
pub fn read_lines_csv(path: &Path) -> Result<Vec<PhaseLine>> {
    let text = std::fs::read_to_string(path)?;
    let mut out: Vec<PhaseLine> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            if line.trim() != LINES_HEADER {
                return Err(Error::Config(format!(
                    "{}: expected header '{LINES_HEADER}'",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Config(format!(
                "{}:{}: expected 3 fields",
                path.display(),
                k + 1
            )));
        }
        let method: LineMethod = f[0].parse()?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("{}:{}: bad number '{s}'", path.display(), k + 1)))
        };
        let point = LinePoint {
            rho: num(f[1])?,
            alpha_c: num(f[2])?,
        };
        match out.iter_mut().find(|l| l.method == method) {
            Some(l) => l.points.push(point),
            None => out.push(PhaseLine {
                method,
                points: vec![point],
                bisection_tol: f64::NAN,
                se_budget: 0,
            }),
        }
    }
    Ok(out)
}
