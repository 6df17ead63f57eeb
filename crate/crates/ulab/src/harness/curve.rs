use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{build_for, run_solver, EnsembleKind, EnsembleSpec, Instance, RunResult, SolverSpec};
use super::sweep::{check_grid, desk_grid};
use crate::error::{Error, Result};
use crate::lines::{tuned_kappa, SeSettings};
use crate::rng::{cell_seed, derive, mix64, stream};

/// Sparsities of the fixed-`ρ` curves.
pub const CURVE_RHOS: [f64; 3] = [0.25, 0.5, 0.75];

// Separates signal seeds from matrix seeds derived off the same base.
const SIGNAL_DOMAIN: u64 = 0x5349_474e_414c_5f43;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub ensembles: Vec<EnsembleSpec>,
    pub solver: SolverSpec,
    pub n: usize,
    pub alpha_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
}

impl CurveConfig {
    /// The six universality ensembles on the 20-point grid.
    pub fn universality(solver: SolverSpec, n: usize, runs: usize, base_seed: u64) -> Self {
        Self {
            ensembles: EnsembleKind::UNIVERSALITY
                .iter()
                .map(|&k| EnsembleSpec::new(k))
                .collect(),
            solver,
            n,
            alpha_grid: desk_grid(),
            rho_grid: CURVE_RHOS.to_vec(),
            runs,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("alpha_grid", &self.alpha_grid)?;
        check_grid("rho_grid", &self.rho_grid)?;
        if self.ensembles.is_empty() {
            return Err(Error::Config("ensembles is empty".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        Ok(())
    }
}

/// One solve of the curve experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRecord {
    pub ensemble: EnsembleKind,
    pub rho: f64,
    pub alpha: f64,
    pub run: usize,
    pub result: RunResult,
}

/// Mean over runs at one `(ensemble, ρ, α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub ensemble: EnsembleKind,
    pub rho: f64,
    pub alpha: f64,
    pub mean_mse: f64,
    pub runs: usize,
    pub errors: usize,
}

/// Matrix seed of `(ensemble, α index, run)`, independent of `ρ`.
pub fn curve_matrix_seed(base: u64, ensemble: EnsembleKind, alpha_index: usize, run: usize) -> u64 {
    derive(cell_seed(base, ensemble.index(), alpha_index, run), stream::MATRIX)
}

/// Signal seed of `(ρ index, α index, run)`, shared by all ensembles.
pub fn curve_signal_seed(base: u64, rho_index: usize, alpha_index: usize, run: usize) -> u64 {
    derive(
        cell_seed(mix64(base ^ SIGNAL_DOMAIN), rho_index, alpha_index, run),
        stream::SIGNAL,
    )
}

/// MSE curves of `cfg.solver`.
pub fn mse_curve(cfg: &CurveConfig) -> Result<Vec<CurveRecord>> {
    Ok(mse_curve_multi(cfg, &[cfg.solver])?.remove(0))
}

/// One record list per solver. Each matrix is built and decomposed once and
/// reused for every `ρ` and every solver; each signal is shared across
/// ensembles, so ensemble differences are paired.
pub fn mse_curve_multi(cfg: &CurveConfig, solvers: &[SolverSpec]) -> Result<Vec<Vec<CurveRecord>>> {
    cfg.validate()?;
    let (na, nr) = (cfg.alpha_grid.len(), cfg.rho_grid.len());
    let tune = solvers.iter().any(SolverSpec::wants_tuned_kappa);
    let se = SeSettings::default();
    let cells: Vec<(usize, usize)> = (0..nr).flat_map(|i| (0..na).map(move |j| (i, j))).collect();
    let tuned: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            if tune {
                tuned_kappa(cfg.alpha_grid[j], cfg.rho_grid[i], &se)
            } else {
                f64::NAN
            }
        })
        .collect();
    let kappa = |k: usize, i: usize, j: usize| {
        let s = &solvers[k];
        if s.wants_tuned_kappa() {
            tuned[i * na + j]
        } else {
            s.settings.amp_kappa.unwrap_or(crate::amp::DEFAULT_KAPPA)
        }
    };

    let tasks: Vec<(usize, usize, usize)> = (0..cfg.ensembles.len())
        .flat_map(|e| (0..na).flat_map(move |j| (0..cfg.runs).map(move |r| (e, j, r))))
        .collect();
    // per task: outcomes[ρ index][solver]
    let results: Vec<Vec<Vec<RunResult>>> = tasks
        .par_iter()
        .map(|&(e, j, run)| {
            let ens = &cfg.ensembles[e];
            let mseed = curve_matrix_seed(cfg.base_seed, ens.kind, j, run);
            let op = match build_for(ens, cfg.n, cfg.alpha_grid[j], mseed) {
                Ok(op) => op,
                Err(e) => return vec![vec![RunResult::Failed(e.to_string()); solvers.len()]; nr],
            };
            let mut shared_svd = None;
            (0..nr)
                .map(|i| {
                    let sseed = curve_signal_seed(cfg.base_seed, i, j, run);
                    let mut inst = match Instance::with_operator(op.clone(), cfg.rho_grid[i], sseed) {
                        Ok(inst) => inst,
                        Err(e) => return vec![RunResult::Failed(e.to_string()); solvers.len()],
                    };
                    if let Some(svd) = shared_svd.take() {
                        inst.set_svd(svd);
                    }
                    let out = solvers
                        .iter()
                        .enumerate()
                        .map(|(k, s)| run_solver(s, &mut inst, kappa(k, i, j), mseed ^ sseed))
                        .collect();
                    shared_svd = inst.take_svd();
                    out
                })
                .collect()
        })
        .collect();

    Ok((0..solvers.len())
        .map(|k| {
            let mut recs = Vec::with_capacity(tasks.len() * nr);
            for i in 0..nr {
                for (t, &(e, j, run)) in tasks.iter().enumerate() {
                    recs.push(CurveRecord {
                        ensemble: cfg.ensembles[e].kind,
                        rho: cfg.rho_grid[i],
                        alpha: cfg.alpha_grid[j],
                        run,
                        result: results[t][i][k].clone(),
                    });
                }
            }
            recs
        })
        .collect())
}

/// Averages records per `(ensemble, ρ, α)`, in first-seen order. Runs that
/// raised an error are left out of the mean.
pub fn curve_points(records: &[CurveRecord]) -> Vec<CurvePoint> {
    let mut out: Vec<(CurvePoint, f64)> = Vec::new();
    for r in records {
        let idx = match out
            .iter()
            .position(|(p, _)| p.ensemble == r.ensemble && p.rho == r.rho && p.alpha == r.alpha)
        {
            Some(i) => i,
            None => {
                out.push((
                    CurvePoint {
                        ensemble: r.ensemble,
                        rho: r.rho,
                        alpha: r.alpha,
                        mean_mse: f64::NAN,
                        runs: 0,
                        errors: 0,
                    },
                    0.0,
                ));
                out.len() - 1
            }
        };
        let (p, sum) = &mut out[idx];
        match r.result.mse() {
            Some(m) => {
                p.runs += 1;
                *sum += m;
            }
            None => p.errors += 1,
        }
    }
    out.into_iter()
        .map(|(mut p, sum)| {
            if p.runs > 0 {
                p.mean_mse = sum / p.runs as f64;
            }
            p
        })
        .collect()
}
