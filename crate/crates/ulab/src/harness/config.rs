//! Declarative experiment file (TOML) with command-line overrides.
//!
//! ```toml
//! preset = "desk"          # or "full"
//! seed = 7
//! ensemble = "dct"
//! solver = "vamp"
//! mode = "bayes"
//! runs = 10
//!
//! [settings]
//! max_iter = 300
//! ```
//!
//! Unset keys fall back to the preset, which differs per experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::CompareConfig;
use super::curve::{CurveConfig, CURVE_RHOS};
use super::spec::{EnsembleKind, EnsembleSpec, ModeKind, SolverKind, SolverSettings, SolverSpec};
use super::sweep::{desk_grid, uniform_grid, SweepConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 20×20 grids at `n = 500`, minutes on a laptop.
    #[default]
    Desk,
    /// 50×50 grids, 50 runs per cell, `n = 1000`.
    Full,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected desk or full)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Preset,
    pub n: Option<usize>,
    pub seed: u64,
    pub ensemble: Option<EnsembleKind>,
    /// Ensembles of the curve experiment.
    pub ensembles: Option<Vec<EnsembleKind>>,
    pub standardize: bool,
    pub normalize_rows: bool,
    pub solver: Option<SolverKind>,
    pub mode: Option<ModeKind>,
    pub alpha_grid: Option<Vec<f64>>,
    pub rho_grid: Option<Vec<f64>>,
    pub runs: Option<usize>,
    pub success_mse: Option<f64>,
    pub band: Option<f64>,
    pub out: Option<PathBuf>,
    pub settings: SolverSettings,
}

/// Flags that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub solver: Option<SolverKind>,
    pub mode: Option<ModeKind>,
    pub ensemble: Option<EnsembleKind>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
}

pub const DEFAULT_SUCCESS_MSE: f64 = 1e-6;
pub const DEFAULT_BAND: f64 = 0.02;

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(p) = o.preset {
            self.preset = p;
        }
        if o.n.is_some() {
            self.n = o.n;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.solver.is_some() {
            self.solver = o.solver;
        }
        if o.mode.is_some() {
            self.mode = o.mode;
        }
        if o.ensemble.is_some() {
            self.ensemble = o.ensemble;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        self
    }

    fn ensemble_spec(&self, kind: EnsembleKind) -> EnsembleSpec {
        EnsembleSpec {
            kind,
            standardize: self.standardize,
            normalize_rows: self.normalize_rows,
        }
    }

    fn solver_spec(&self, default_solver: SolverKind) -> SolverSpec {
        SolverSpec {
            solver: self.solver.unwrap_or(default_solver),
            mode: self.mode.unwrap_or(ModeKind::Bayes),
            settings: self.settings,
        }
    }

    fn check_settings(&self) -> Result<()> {
        let s = &self.settings;
        if s.max_iter == 0 {
            return Err(Error::Config("settings.max_iter must be at least 1".into()));
        }
        if !(s.tol > 0.0) {
            return Err(Error::Config("settings.tol must be positive".into()));
        }
        if s.damping.is_some_and(|d| !(d > 0.0 && d <= 1.0)) {
            return Err(Error::Config("settings.damping must lie in (0, 1]".into()));
        }
        if s.amp_kappa.is_some_and(|k| !(k > 0.0)) {
            return Err(Error::Config("settings.amp_kappa must be positive".into()));
        }
        if !(s.vamp_kappa > 0.0) {
            return Err(Error::Config("settings.vamp_kappa must be positive".into()));
        }
        Ok(())
    }

    /// Phase-diagram sweep.
    pub fn sweep_config(&self) -> Result<SweepConfig> {
        self.check_settings()?;
        let (grid, n, runs) = match self.preset {
            Preset::Desk => (desk_grid(), 500, 10),
            Preset::Full => (uniform_grid(0.01, 0.02, 50), 1000, 50),
        };
        let cfg = SweepConfig {
            ensemble: self.ensemble_spec(self.ensemble.unwrap_or(EnsembleKind::Gaussian)),
            solver: self.solver_spec(SolverKind::Vamp),
            n: self.n.unwrap_or(n),
            alpha_grid: self.alpha_grid.clone().unwrap_or_else(|| grid.clone()),
            rho_grid: self.rho_grid.clone().unwrap_or(grid),
            runs_per_cell: self.runs.unwrap_or(runs),
            success_mse: self.success_mse.unwrap_or(DEFAULT_SUCCESS_MSE),
            base_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fixed-`ρ` MSE curves.
    pub fn curve_config(&self) -> Result<CurveConfig> {
        self.check_settings()?;
        let (grid, n) = match self.preset {
            Preset::Desk => (desk_grid(), 1000),
            Preset::Full => (uniform_grid(0.01, 0.02, 50), 2000),
        };
        let kinds = match (&self.ensembles, self.ensemble) {
            (Some(list), _) => list.clone(),
            (None, Some(k)) => vec![k],
            (None, None) => EnsembleKind::UNIVERSALITY.to_vec(),
        };
        let cfg = CurveConfig {
            ensembles: kinds.into_iter().map(|k| self.ensemble_spec(k)).collect(),
            solver: self.solver_spec(SolverKind::Vamp),
            n: self.n.unwrap_or(n),
            alpha_grid: self.alpha_grid.clone().unwrap_or(grid),
            rho_grid: self.rho_grid.clone().unwrap_or_else(|| CURVE_RHOS.to_vec()),
            runs: self.runs.unwrap_or(20),
            base_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// AMP-with-Gaussianization versus VAMP.
    pub fn compare_config(&self) -> Result<CompareConfig> {
        self.check_settings()?;
        let (grid, n, runs) = match self.preset {
            Preset::Desk => (uniform_grid(0.05, 0.1, 10), 500, 5),
            Preset::Full => (desk_grid(), 1000, 20),
        };
        let cfg = CompareConfig {
            ensemble: self.ensemble_spec(self.ensemble.unwrap_or(EnsembleKind::Gaussian)),
            mode: self.mode.unwrap_or(ModeKind::Bayes),
            settings: self.settings,
            n: self.n.unwrap_or(n),
            alpha_grid: self.alpha_grid.clone().unwrap_or_else(|| grid.clone()),
            rho_grid: self.rho_grid.clone().unwrap_or(grid),
            runs_per_cell: self.runs.unwrap_or(runs),
            success_mse: self.success_mse.unwrap_or(DEFAULT_SUCCESS_MSE),
            band: self.band.unwrap_or(DEFAULT_BAND),
            base_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `ρ` values of the theoretical lines.
    pub fn line_rhos(&self) -> Result<Vec<f64>> {
        let rhos = self.rho_grid.clone().unwrap_or_else(|| match self.preset {
            Preset::Desk => desk_grid(),
            Preset::Full => uniform_grid(0.03, 0.01, 95),
        });
        if rhos.iter().any(|&r| !(r > 0.02 && r < 0.98)) {
            return Err(Error::Config("line rho values must lie in (0.02, 0.98)".into()));
        }
        if rhos.is_empty() {
            return Err(Error::Config("rho_grid is empty".into()));
        }
        Ok(rhos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults() {
        let cfg = FileConfig::default().sweep_config().unwrap();
        assert_eq!(cfg.n, 500);
        assert_eq!(cfg.alpha_grid.len(), 20);
        assert_eq!(cfg.runs_per_cell, 10);
        assert_eq!(cfg.solver.solver, SolverKind::Vamp);
        let full = FileConfig {
            preset: Preset::Full,
            ..Default::default()
        }
        .sweep_config()
        .unwrap();
        assert_eq!(full.alpha_grid.len(), 50);
        assert!((full.alpha_grid[49] - 0.99).abs() < 1e-12);
    }

    #[test]
    fn parses_and_overrides() {
        let text = r#"
            preset = "desk"
            seed = 9
            ensemble = "rfm-tanh"
            mode = "l1"
            runs = 3
            alpha_grid = [0.3, 0.6]
            [settings]
            max_iter = 50
        "#;
        let file = FileConfig::from_toml(text).unwrap();
        let o = Overrides {
            n: Some(64),
            ensemble: Some(EnsembleKind::Dct),
            ..Default::default()
        };
        let cfg = file.apply(&o).sweep_config().unwrap();
        assert_eq!(cfg.n, 64);
        assert_eq!(cfg.base_seed, 9);
        assert_eq!(cfg.ensemble.kind, EnsembleKind::Dct);
        assert_eq!(cfg.solver.mode, ModeKind::L1);
        assert_eq!(cfg.solver.settings.max_iter, 50);
        assert_eq!(cfg.alpha_grid, vec![0.3, 0.6]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(FileConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(
            FileConfig::from_toml("ensemble = \"nope\""),
            Err(Error::Config(_))
        ));
        let f = FileConfig::from_toml("alpha_grid = [0.5, 0.4]").unwrap();
        assert!(matches!(f.sweep_config(), Err(Error::Config(_))));
        let f = FileConfig::from_toml("runs = 0").unwrap();
        assert!(matches!(f.sweep_config(), Err(Error::Config(_))));
        let f = FileConfig::from_toml("[settings]\ndamping = 0.0").unwrap();
        assert!(matches!(f.sweep_config(), Err(Error::Config(_))));
    }
}
