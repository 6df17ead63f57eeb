//! Message-passing solvers and state-evolution analysis for noiseless linear
//! estimation `y = Φx*` with Gauss-Bernoulli signals.
//!
//! * [`denoise`]: signal sampling and the scalar denoisers.
//! * [`se`], [`lines`]: the state-evolution map and the transition lines it implies.
//! * [`ensembles`]: measurement operators, SVD whitening and Gaussianization.
//! * [`amp`], [`vamp`]: the two solvers, both producing a [`Trajectory`].
//! * [`harness`]: phase-diagram sweeps, MSE curves and paired comparisons.

pub mod amp;
pub mod denoise;
pub mod ensembles;
pub mod error;
pub mod format;
pub mod harness;
pub mod lines;
pub mod quadrature;
pub mod rng;
pub mod se;
pub mod trajectory;
pub mod vamp;

pub use error::{Error, Result};
pub use trajectory::{IterRecord, Status, Trajectory};
