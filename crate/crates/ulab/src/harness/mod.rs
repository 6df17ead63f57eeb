//! Experiment engine: phase-diagram sweeps, fixed-`ρ` MSE curves, paired
//! AMP/VAMP comparisons, and their CSV and SVG outputs.
//!
//! Every solve draws its matrix and signal from seeds derived from the base
//! seed and the cell indices, so results do not depend on scheduling.

pub mod compare;
pub mod config;
pub mod csv;
pub mod curve;
pub mod render;
pub mod spec;
pub mod sweep;

pub use compare::{compare_amp_vamp, CompareConfig, PairRecord, PairedReport};
pub use config::{FileConfig, Overrides, Preset};
pub use curve::{curve_points, mse_curve, mse_curve_multi, CurveConfig, CurvePoint, CurveRecord, CURVE_RHOS};
pub use render::{heatmap_svg, mse_color, render_heatmap};
pub use spec::{
    build_for, run_solver, solve_instance, EnsembleKind, EnsembleSpec, Instance, ModeKind, RunResult, SolverKind,
    SolverSettings, SolverSpec, DEFAULT_DAMPING_BAYES, DEFAULT_DAMPING_L1,
};
pub use sweep::{desk_grid, sweep, sweep_multi, uniform_grid, CellSummary, PhaseGrid, SweepConfig};
