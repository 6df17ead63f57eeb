use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::amp::{amp_solve, amp_solve_with_trick_svd, AmpConfig, AmpMode};
use crate::denoise::{sample_signal, SignalModel};
use crate::ensembles::{
    build_gaussian, build_haar_wavelet_with, build_hadamard, build_random_features, build_rot_invariant,
    build_subsampled_dct, Activation, MeasurementOperator, SpectrumSpec, SvdBundle,
};
use crate::error::{invalid, Error, Result};
use crate::lines::{tuned_kappa, SeSettings};
use crate::rng::{derive, stream};
use crate::trajectory::{Status, Trajectory};
use crate::vamp::{vamp_solve_svd, VampConfig, VampMode, DEFAULT_VAMP_KAPPA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    Gaussian,
    Dct,
    Hadamard,
    RfmRelu,
    RfmSign,
    RfmTanh,
    HaarWavelet,
    RotInvariant,
}

impl EnsembleKind {
    /// The six ensembles of the universality experiments.
    pub const UNIVERSALITY: [EnsembleKind; 6] = [
        EnsembleKind::Gaussian,
        EnsembleKind::Dct,
        EnsembleKind::Hadamard,
        EnsembleKind::RfmRelu,
        EnsembleKind::RfmSign,
        EnsembleKind::RfmTanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Dct => "dct",
            EnsembleKind::Hadamard => "hadamard",
            EnsembleKind::RfmRelu => "rfm-relu",
            EnsembleKind::RfmSign => "rfm-sign",
            EnsembleKind::RfmTanh => "rfm-tanh",
            EnsembleKind::HaarWavelet => "haar-wavelet",
            EnsembleKind::RotInvariant => "rot-invariant",
        }
    }

    /// Stable index used in seed derivation.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Needs `n` to be a power of two.
    pub fn power_of_two(self) -> bool {
        matches!(self, EnsembleKind::Hadamard | EnsembleKind::HaarWavelet)
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            EnsembleKind::Gaussian,
            EnsembleKind::Dct,
            EnsembleKind::Hadamard,
            EnsembleKind::RfmRelu,
            EnsembleKind::RfmSign,
            EnsembleKind::RfmTanh,
            EnsembleKind::HaarWavelet,
            EnsembleKind::RotInvariant,
        ];
        all.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown ensemble '{s}' (expected one of {})",
                all.map(|k| k.name()).join(", ")
            ))
        })
    }
}

/// An ensemble plus its construction flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    /// Random features: center columns and scale to unit mean column norm.
    #[serde(default)]
    pub standardize: bool,
    /// Haar wavelet: unit-norm rows instead of the global `1/√n`.
    #[serde(default)]
    pub normalize_rows: bool,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind) -> Self {
        Self {
            kind,
            standardize: false,
            normalize_rows: false,
        }
    }

    /// Signal dimension actually used for a requested `n`.
    pub fn effective_n(&self, n: usize) -> usize {
        if self.kind.power_of_two() {
            n.next_power_of_two()
        } else {
            n
        }
    }

    pub fn build(&self, m: usize, n: usize, seed: u64) -> Result<MeasurementOperator> {
        match self.kind {
            EnsembleKind::Gaussian => build_gaussian(m, n, seed),
            EnsembleKind::Dct => build_subsampled_dct(m, n, seed),
            EnsembleKind::Hadamard => build_hadamard(m, n, seed),
            EnsembleKind::RfmRelu => build_random_features(m, n, Activation::Relu, seed, self.standardize),
            EnsembleKind::RfmSign => build_random_features(m, n, Activation::Sign, seed, self.standardize),
            EnsembleKind::RfmTanh => build_random_features(m, n, Activation::Tanh, seed, self.standardize),
            EnsembleKind::HaarWavelet => build_haar_wavelet_with(m, n, seed, self.normalize_rows),
            EnsembleKind::RotInvariant => build_rot_invariant(m, n, &SpectrumSpec::GaussianLike, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Amp,
    AmpTrick,
    Vamp,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Amp => "amp",
            SolverKind::AmpTrick => "amp-trick",
            SolverKind::Vamp => "vamp",
        }
    }

    fn needs_svd(self) -> bool {
        !matches!(self, SolverKind::Amp)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amp" => Ok(SolverKind::Amp),
            "amp-trick" => Ok(SolverKind::AmpTrick),
            "vamp" => Ok(SolverKind::Vamp),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected amp, amp-trick or vamp)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    L1,
    Bayes,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::L1 => "l1",
            ModeKind::Bayes => "bayes",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(ModeKind::L1),
            "bayes" => Ok(ModeKind::Bayes),
            other => Err(Error::Config(format!("unknown mode '{other}' (expected l1 or bayes)"))),
        }
    }
}

/// Bayes VAMP runs undamped.
pub const DEFAULT_DAMPING_BAYES: f64 = 1.0;
/// Undamped ℓ1 messages can grow without bound far below the transition on
/// ensembles with a dominant singular direction (non-centered random features).
pub const DEFAULT_DAMPING_L1: f64 = 0.8;

/// Iteration controls shared by every solve of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iter: usize,
    pub tol: f64,
    /// AMP soft-threshold ratio; `None` tunes it per grid point from state evolution.
    pub amp_kappa: Option<f64>,
    pub vamp_kappa: f64,
    /// VAMP message damping; `None` means the mode's default
    /// ([`DEFAULT_DAMPING_BAYES`], [`DEFAULT_DAMPING_L1`]).
    pub damping: Option<f64>,
    pub delta: Option<f64>,
    pub rho_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-9,
            amp_kappa: None,
            vamp_kappa: DEFAULT_VAMP_KAPPA,
            damping: None,
            delta: None,
            rho_floor: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub solver: SolverKind,
    pub mode: ModeKind,
    pub settings: SolverSettings,
}

impl SolverSpec {
    pub fn new(solver: SolverKind, mode: ModeKind) -> Self {
        Self {
            solver,
            mode,
            settings: SolverSettings::default(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.solver, self.mode)
    }

    pub fn amp_config(&self, rho: f64, kappa: f64, seed: u64) -> AmpConfig {
        AmpConfig {
            max_iter: self.settings.max_iter,
            tol: self.settings.tol,
            threshold_kappa: kappa,
            mode: match self.mode {
                ModeKind::L1 => AmpMode::L1,
                ModeKind::Bayes => AmpMode::Bayes { rho },
            },
            seed,
            onsager: true,
        }
    }

    pub fn vamp_config(&self, rho: f64, seed: u64) -> VampConfig {
        VampConfig {
            max_iter: self.settings.max_iter,
            tol: self.settings.tol,
            damping: self.damping(),
            delta: self.settings.delta,
            rho_floor: self.settings.rho_floor,
            mode: match self.mode {
                ModeKind::L1 => VampMode::L1 {
                    kappa: self.settings.vamp_kappa,
                },
                ModeKind::Bayes => VampMode::Bayes { rho },
            },
            seed,
        }
    }

    pub fn damping(&self) -> f64 {
        self.settings.damping.unwrap_or(match self.mode {
            ModeKind::Bayes => DEFAULT_DAMPING_BAYES,
            ModeKind::L1 => DEFAULT_DAMPING_L1,
        })
    }

    /// AMP threshold ratio at `(α, ρ)`: the configured one, or tuned from
    /// state evolution when unset.
    pub fn kappa_for(&self, alpha: f64, rho: f64) -> f64 {
        match self.settings.amp_kappa {
            Some(k) => k,
            None if self.wants_tuned_kappa() => tuned_kappa(alpha, rho, &SeSettings::default()),
            None => crate::amp::DEFAULT_KAPPA,
        }
    }

    /// Whether AMP here needs a state-evolution tuned threshold.
    pub fn wants_tuned_kappa(&self) -> bool {
        self.mode == ModeKind::L1 && self.solver != SolverKind::Vamp && self.settings.amp_kappa.is_none()
    }
}

/// One sampled problem.
pub struct Instance {
    pub op: MeasurementOperator,
    pub truth: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
    svd: Option<std::result::Result<SvdBundle, String>>,
}

impl Instance {
    /// Matrix from `matrix_seed`, signal from `signal_seed`.
    pub fn sample(
        ensemble: &EnsembleSpec,
        n: usize,
        alpha: f64,
        rho: f64,
        matrix_seed: u64,
        signal_seed: u64,
    ) -> Result<Self> {
        let op = build_for(ensemble, n, alpha, matrix_seed)?;
        Self::with_operator(op, rho, signal_seed)
    }

    pub fn with_operator(op: MeasurementOperator, rho: f64, signal_seed: u64) -> Result<Self> {
        let truth = sample_signal(&SignalModel::new(op.n(), rho, signal_seed)?)?;
        let y = op.apply(&truth)?;
        Ok(Self {
            op,
            truth,
            y,
            rho,
            svd: None,
        })
    }

    /// Computes the decomposition once; later calls return the cached outcome.
    pub fn ensure_svd(&mut self) -> std::result::Result<(), String> {
        if self.svd.is_none() {
            self.svd = Some(SvdBundle::compute(&self.op).map_err(|e| e.to_string()));
        }
        match self.svd.as_ref().unwrap() {
            Ok(_) => Ok(()),
            Err(e) => Err(e.clone()),
        }
    }

    pub fn svd(&self) -> Option<&SvdBundle> {
        self.svd.as_ref().and_then(|r| r.as_ref().ok())
    }

    /// Moves the cached decomposition out, to hand it to another instance on
    /// the same operator.
    pub(crate) fn take_svd(&mut self) -> Option<std::result::Result<SvdBundle, String>> {
        self.svd.take()
    }

    /// Installs a decomposition of this instance's operator.
    pub(crate) fn set_svd(&mut self, svd: std::result::Result<SvdBundle, String>) {
        self.svd = Some(svd);
    }
}

/// Operator of the ensemble at `α` with `m = round(α·n)` rows.
pub fn build_for(ensemble: &EnsembleSpec, n: usize, alpha: f64, seed: u64) -> Result<MeasurementOperator> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let n = ensemble.effective_n(n);
    let m = ((alpha * n as f64).round() as usize).clamp(1, n);
    ensemble.build(m, n, seed)
}

/// Result of one solve, or the error that prevented it.
#[derive(Clone, Debug, PartialEq)]
pub enum RunResult {
    Done {
        mse: f64,
        iterations: usize,
        status: Status,
    },
    Failed(String),
}

impl RunResult {
    pub fn mse(&self) -> Option<f64> {
        match self {
            RunResult::Done { mse, .. } => Some(*mse),
            RunResult::Failed(_) => None,
        }
    }

    pub fn status(&self) -> Option<Status> {
        match self {
            RunResult::Done { status, .. } => Some(*status),
            RunResult::Failed(_) => None,
        }
    }

    pub fn iterations(&self) -> Option<usize> {
        match self {
            RunResult::Done { iterations, .. } => Some(*iterations),
            RunResult::Failed(_) => None,
        }
    }

    fn from_trajectory(t: Result<Trajectory>) -> Self {
        match t {
            Ok(t) => {
                let mse = t.final_mse().filter(|m| m.is_finite()).unwrap_or(f64::INFINITY);
                RunResult::Done {
                    mse,
                    iterations: t.iterations(),
                    status: t.status,
                }
            }
            Err(e) => RunResult::Failed(e.to_string()),
        }
    }
}

/// Solves `inst` with `spec`, returning the whole trajectory; `kappa` is the
/// AMP threshold ratio to use.
pub fn solve_instance(spec: &SolverSpec, inst: &mut Instance, kappa: f64, seed: u64) -> Result<Trajectory> {
    let rho = inst.rho;
    let solver_seed = derive(seed, stream::SOLVER);
    if spec.solver.needs_svd() {
        inst.ensure_svd().map_err(Error::DegenerateSpectrum)?;
    }
    match spec.solver {
        SolverKind::Amp => amp_solve(
            &inst.op,
            &inst.y,
            &spec.amp_config(rho, kappa, solver_seed),
            Some(&inst.truth),
        ),
        SolverKind::AmpTrick => {
            let svd = inst.svd().expect("decomposition checked above");
            amp_solve_with_trick_svd(
                svd,
                &inst.y,
                &spec.amp_config(rho, kappa, solver_seed),
                Some(&inst.truth),
            )
        }
        SolverKind::Vamp => {
            let svd = inst.svd().expect("decomposition checked above");
            vamp_solve_svd(svd, &inst.y, &spec.vamp_config(rho, solver_seed), Some(&inst.truth))
        }
    }
}

/// [`solve_instance`] reduced to its outcome; errors become [`RunResult::Failed`].
pub fn run_solver(spec: &SolverSpec, inst: &mut Instance, kappa: f64, seed: u64) -> RunResult {
    RunResult::from_trajectory(solve_instance(spec, inst, kappa, seed))
}
