use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{run_solver, EnsembleSpec, Instance, RunResult, SolverSpec};
use crate::error::{Error, Result};
use crate::lines::{tuned_kappa, SeSettings};
use crate::rng::{cell_seed, derive, stream};
use crate::trajectory::Status;

/// `start + step·i` for `i < count`.
pub fn uniform_grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

/// The 20-point grid `0.025, 0.075, …, 0.975`.
pub fn desk_grid() -> Vec<f64> {
    uniform_grid(0.025, 0.05, 20)
}

pub(crate) fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if g.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Config(format!("{name} values must lie in (0, 1)")));
    }
    if g.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ensemble: EnsembleSpec,
    pub solver: SolverSpec,
    pub n: usize,
    pub alpha_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub runs_per_cell: usize,
    pub success_mse: f64,
    pub base_seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_grid("alpha_grid", &self.alpha_grid)?;
        check_grid("rho_grid", &self.rho_grid)?;
        if self.runs_per_cell == 0 {
            return Err(Error::Config("runs_per_cell must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.success_mse > 0.0) {
            return Err(Error::Config("success_mse must be positive".into()));
        }
        Ok(())
    }
}

/// Aggregate of one `(α, ρ)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub alpha: f64,
    pub rho: f64,
    pub runs: usize,
    pub mean_mse: f64,
    pub median_mse: f64,
    pub success_fraction: f64,
    /// Runs that did not end `Converged`, errors included.
    pub failure_fraction: f64,
    pub mean_iterations: f64,
    /// Runs that raised an error instead of completing.
    pub errors: usize,
}

impl CellSummary {
    pub fn from_runs(alpha: f64, rho: f64, runs: &[RunResult], success_mse: f64) -> Self {
        let mut mses: Vec<f64> = runs.iter().filter_map(RunResult::mse).collect();
        let done = mses.len();
        let success = mses.iter().filter(|&&m| m < success_mse).count();
        let failed = runs.iter().filter(|r| r.status() != Some(Status::Converged)).count();
        let iters: usize = runs.iter().filter_map(RunResult::iterations).sum();
        let mean = if done > 0 {
            mses.iter().sum::<f64>() / done as f64
        } else {
            f64::NAN
        };
        mses.sort_by(f64::total_cmp);
        let median = match done {
            0 => f64::NAN,
            d if d % 2 == 1 => mses[d / 2],
            d => 0.5 * (mses[d / 2 - 1] + mses[d / 2]),
        };
        let total = runs.len().max(1) as f64;
        Self {
            alpha,
            rho,
            runs: runs.len(),
            mean_mse: mean,
            median_mse: median,
            success_fraction: success as f64 / total,
            failure_fraction: failed as f64 / total,
            mean_iterations: if done > 0 { iters as f64 / done as f64 } else { f64::NAN },
            errors: runs.len() - done,
        }
    }
}

/// Cells in row-major order: `ρ` outer, `α` inner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub alpha_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub cells: Vec<CellSummary>,
}

impl PhaseGrid {
    pub fn cell(&self, rho_index: usize, alpha_index: usize) -> &CellSummary {
        &self.cells[rho_index * self.alpha_grid.len() + alpha_index]
    }

    /// Per `ρ` row, the `α` where the success fraction first reaches 0.5,
    /// linearly interpolated from the preceding cell. `None` if it never does;
    /// the first grid `α` if the row starts above 0.5.
    pub fn empirical_boundary(&self) -> Vec<(f64, Option<f64>)> {
        let na = self.alpha_grid.len();
        self.rho_grid
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let sf: Vec<f64> = (0..na).map(|j| self.cell(i, j).success_fraction).collect();
                let crossing = sf.iter().position(|&f| f >= 0.5).map(|j| {
                    if j == 0 {
                        self.alpha_grid[0]
                    } else {
                        let (a0, a1) = (self.alpha_grid[j - 1], self.alpha_grid[j]);
                        let (f0, f1) = (sf[j - 1], sf[j]);
                        a0 + (0.5 - f0) / (f1 - f0) * (a1 - a0)
                    }
                });
                (rho, crossing)
            })
            .collect()
    }
}

/// Outcomes of every solver on one sampled instance.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskResult {
    pub rho_index: usize,
    pub alpha_index: usize,
    pub run: usize,
    pub outcomes: Vec<RunResult>,
}

/// AMP thresholds per cell, tuned from state evolution where requested.
fn cell_kappas(cfg: &SweepConfig, solvers: &[SolverSpec]) -> Vec<Vec<f64>> {
    let tune = solvers.iter().any(SolverSpec::wants_tuned_kappa);
    let cells: Vec<(usize, usize)> = (0..cfg.rho_grid.len())
        .flat_map(|i| (0..cfg.alpha_grid.len()).map(move |j| (i, j)))
        .collect();
    let se = SeSettings::default();
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
    solvers
        .iter()
        .map(|s| {
            if s.wants_tuned_kappa() {
                tuned.clone()
            } else {
                vec![s.settings.amp_kappa.unwrap_or(crate::amp::DEFAULT_KAPPA); cells.len()]
            }
        })
        .collect()
}

/// Runs every solver of `solvers` on shared instances of the grid of `cfg`
/// (its own `solver` field is ignored). Results come back in task order
/// regardless of scheduling.
pub fn run_grid(cfg: &SweepConfig, solvers: &[SolverSpec]) -> Result<Vec<TaskResult>> {
    cfg.validate()?;
    let kappas = cell_kappas(cfg, solvers);
    let na = cfg.alpha_grid.len();
    let tasks: Vec<(usize, usize, usize)> = (0..cfg.rho_grid.len())
        .flat_map(|i| (0..na).flat_map(move |j| (0..cfg.runs_per_cell).map(move |r| (i, j, r))))
        .collect();
    Ok(tasks
        .par_iter()
        .map(|&(i, j, run)| {
            let seed = cell_seed(cfg.base_seed, i, j, run);
            let (alpha, rho) = (cfg.alpha_grid[j], cfg.rho_grid[i]);
            let outcomes = match Instance::sample(
                &cfg.ensemble,
                cfg.n,
                alpha,
                rho,
                derive(seed, stream::MATRIX),
                derive(seed, stream::SIGNAL),
            ) {
                Ok(mut inst) => solvers
                    .iter()
                    .enumerate()
                    .map(|(k, s)| run_solver(s, &mut inst, kappas[k][i * na + j], seed))
                    .collect(),
                Err(e) => vec![RunResult::Failed(e.to_string()); solvers.len()],
            };
            TaskResult {
                rho_index: i,
                alpha_index: j,
                run,
                outcomes,
            }
        })
        .collect())
}

fn aggregate(cfg: &SweepConfig, results: &[TaskResult], k: usize) -> PhaseGrid {
    let na = cfg.alpha_grid.len();
    let mut buckets: Vec<Vec<RunResult>> = vec![Vec::new(); cfg.rho_grid.len() * na];
    for t in results {
        buckets[t.rho_index * na + t.alpha_index].push(t.outcomes[k].clone());
    }
    let cells = buckets
        .iter()
        .enumerate()
        .map(|(idx, runs)| {
            let (i, j) = (idx / na, idx % na);
            CellSummary::from_runs(cfg.alpha_grid[j], cfg.rho_grid[i], runs, cfg.success_mse)
        })
        .collect();
    PhaseGrid {
        alpha_grid: cfg.alpha_grid.clone(),
        rho_grid: cfg.rho_grid.clone(),
        cells,
    }
}

/// Phase diagram of `cfg.solver` on `cfg.ensemble`.
pub fn sweep(cfg: &SweepConfig) -> Result<PhaseGrid> {
    Ok(sweep_multi(cfg, &[cfg.solver])?.remove(0))
}

/// One phase diagram per solver, all on the same instances.
pub fn sweep_multi(cfg: &SweepConfig, solvers: &[SolverSpec]) -> Result<Vec<PhaseGrid>> {
    let results = run_grid(cfg, solvers)?;
    Ok((0..solvers.len()).map(|k| aggregate(cfg, &results, k)).collect())
}
