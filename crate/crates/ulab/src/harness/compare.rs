use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{EnsembleSpec, ModeKind, RunResult, SolverKind, SolverSettings, SolverSpec};
use super::sweep::{run_grid, SweepConfig};
use crate::error::{Error, Result};
use crate::lines::{critical_alpha, LineMethod};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub ensemble: EnsembleSpec,
    pub mode: ModeKind,
    pub settings: SolverSettings,
    pub n: usize,
    pub alpha_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub runs_per_cell: usize,
    pub success_mse: f64,
    /// Pairs with `|α − α_c(ρ)|` at most this are left out of the report.
    pub band: f64,
    pub base_seed: u64,
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.band >= 0.0) {
            return Err(Error::Config("band must be non-negative".into()));
        }
        self.as_sweep().validate()
    }

    fn solver(&self, solver: SolverKind) -> SolverSpec {
        SolverSpec {
            solver,
            mode: self.mode,
            settings: self.settings,
        }
    }

    fn as_sweep(&self) -> SweepConfig {
        SweepConfig {
            ensemble: self.ensemble,
            solver: self.solver(SolverKind::Vamp),
            n: self.n,
            alpha_grid: self.alpha_grid.clone(),
            rho_grid: self.rho_grid.clone(),
            runs_per_cell: self.runs_per_cell,
            success_mse: self.success_mse,
            base_seed: self.base_seed,
        }
    }

    pub fn line_method(&self) -> LineMethod {
        match self.mode {
            ModeKind::L1 => LineMethod::DonohoTanner,
            ModeKind::Bayes => LineMethod::BayesHard,
        }
    }
}

/// Both solvers on one `(matrix, signal)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    pub alpha: f64,
    pub rho: f64,
    pub run: usize,
    pub amp: RunResult,
    pub vamp: RunResult,
    /// Inside the transition band.
    pub excluded: bool,
}

impl PairRecord {
    /// Success verdicts of (AMP, VAMP); an errored run counts as failure.
    pub fn verdicts(&self, success_mse: f64) -> (bool, bool) {
        let ok = |r: &RunResult| r.mse().is_some_and(|m| m < success_mse);
        (ok(&self.amp), ok(&self.vamp))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedReport {
    pub pairs: Vec<PairRecord>,
    /// Fraction of considered pairs with equal verdicts.
    pub agreement_rate: f64,
    /// Pearson correlation of `log₁₀ MSE` over considered pairs where both
    /// solves completed, with MSE floored at `1e-16`.
    pub mse_correlation: f64,
    pub considered: usize,
    pub excluded: usize,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if a.len() < 2 {
        return f64::NAN;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// AMP with the Gaussianizing transform and VAMP on identical instances.
pub fn compare_amp_vamp(cfg: &CompareConfig) -> Result<PairedReport> {
    cfg.validate()?;
    let method = cfg.line_method();
    // rows whose line cannot be located are never excluded
    let critical: Vec<Option<f64>> = cfg
        .rho_grid
        .par_iter()
        .map(|&rho| critical_alpha(rho, method).ok())
        .collect();
    let solvers = [cfg.solver(SolverKind::AmpTrick), cfg.solver(SolverKind::Vamp)];
    let results = run_grid(&cfg.as_sweep(), &solvers)?;

    let pairs: Vec<PairRecord> = results
        .into_iter()
        .map(|t| {
            let (alpha, rho) = (cfg.alpha_grid[t.alpha_index], cfg.rho_grid[t.rho_index]);
            let excluded = critical[t.rho_index].is_some_and(|ac| (alpha - ac).abs() <= cfg.band);
            let mut o = t.outcomes.into_iter();
            PairRecord {
                alpha,
                rho,
                run: t.run,
                amp: o.next().expect("two solvers"),
                vamp: o.next().expect("two solvers"),
                excluded,
            }
        })
        .collect();

    let kept: Vec<&PairRecord> = pairs.iter().filter(|p| !p.excluded).collect();
    let agree = kept
        .iter()
        .filter(|p| {
            let (a, v) = p.verdicts(cfg.success_mse);
            a == v
        })
        .count();
    let (mut la, mut lv) = (Vec::new(), Vec::new());
    for p in &kept {
        if let (Some(a), Some(v)) = (p.amp.mse(), p.vamp.mse()) {
            if a.is_finite() && v.is_finite() {
                la.push(a.max(1e-16).log10());
                lv.push(v.max(1e-16).log10());
            }
        }
    }
    let considered = kept.len();
    Ok(PairedReport {
        agreement_rate: if considered > 0 {
            agree as f64 / considered as f64
        } else {
            f64::NAN
        },
        mse_correlation: pearson(&la, &lv),
        considered,
        excluded: pairs.len() - considered,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::pearson;

    #[test]
    fn pearson_of_affine_copy_is_one() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let b: Vec<f64> = a.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((pearson(&a, &b) - 1.0).abs() < 1e-12);
        let c: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson(&a, &c) + 1.0).abs() < 1e-12);
    }
}
