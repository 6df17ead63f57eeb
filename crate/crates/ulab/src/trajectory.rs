use serde::{Deserialize, Serialize};

/// How a solve ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Diverged => "diverged",
        }
    }
}

/// One iteration; record 0 is the initial state `x̂ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// `‖x̂ − x*‖²/n`, when the truth is known.
    pub mse: Option<f64>,
    /// `‖y − Φx̂‖`.
    pub residual_norm: f64,
    /// Effective channel variance fed to the denoiser.
    pub tau2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<IterRecord>,
    pub status: Status,
    /// Estimate of the last record.
    pub final_estimate: Vec<f64>,
}

impl Trajectory {
    /// Completed iterations, excluding the initial record.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.mse)
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

pub(crate) fn mse(x: &[f64], truth: &[f64]) -> f64 {
    x.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Divergence guard relative to the initial record.
pub(crate) struct Guard {
    mse0: Option<f64>,
    res0: f64,
}

pub(crate) const BLOW_UP: f64 = 1e6;

impl Guard {
    pub(crate) fn new(first: &IterRecord) -> Self {
        Self {
            mse0: first.mse,
            res0: first.residual_norm,
        }
    }

    pub(crate) fn tripped(&self, r: &IterRecord) -> bool {
        if !r.residual_norm.is_finite() || r.mse.is_some_and(|m| !m.is_finite()) {
            return true;
        }
        if self.res0 > 0.0 && r.residual_norm > BLOW_UP * self.res0 {
            return true;
        }
        matches!((self.mse0, r.mse), (Some(m0), Some(m)) if m0 > 0.0 && m > BLOW_UP * m0)
    }
}
