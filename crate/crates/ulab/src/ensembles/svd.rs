//! Thin SVD of an operator and the whitening / Gaussianizing transforms.

use faer::{Mat, Side};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::builders::{gaussian_singular_values, haar_orthonormal_columns};
use super::operator::{EnsembleTag, MeasurementOperator};
use crate::error::{ensure_finite_slice, invalid, Error, Result};
use crate::rng::{derive, rng_from, stream};

/// Condition-number ceiling for whitening.
pub const MAX_CONDITION: f64 = 1e12;

// Gram eigenvalues resolve singular values to relative accuracy ~ε·cond²;
// beyond this eigenvalue ratio the direct SVD is used instead.
const GRAM_MIN_EIG_RATIO: f64 = 1e-8;

/// `Φ = U·diag(s)·Vt` with `k = min(m, n)`: `U` is `m×k`, `Vt` is `k×n`
/// with orthonormal rows and `s` is nonincreasing.
#[derive(Clone, Debug)]
pub struct SvdBundle {
    m: usize,
    n: usize,
    // None when U = I
    u: Option<Mat<f64>>,
    s: Vec<f64>,
    vt: MeasurementOperator,
}

impl SvdBundle {
    pub fn compute(op: &MeasurementOperator) -> Result<Self> {
        let (m, n) = (op.m(), op.n());
        if op.row_orthonormal() {
            return Ok(Self {
                m,
                n,
                u: None,
                s: vec![1.0; m],
                vt: op.clone(),
            });
        }
        let a = op
            .dense_view()
            .ok_or_else(|| invalid(format!("operator {} has no dense view for an SVD", op.tag())))?;
        if let Some(b) = gram_route(a, m, n) {
            return Ok(b);
        }
        let svd = a
            .thin_svd()
            .map_err(|e| Error::DegenerateSpectrum(format!("SVD did not converge: {e:?}")))?;
        let s: Vec<f64> = (0..m.min(n)).map(|i| svd.S()[i]).collect();
        let vt = svd.V().transpose().to_owned();
        Ok(Self {
            m,
            n,
            u: Some(svd.U().to_owned()),
            s,
            vt: MeasurementOperator::from_dense_parts(vt, EnsembleTag::Whitened, None, None, true),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonincreasing singular values, length `min(m, n)`.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Left factor, `None` meaning the identity.
    pub fn u(&self) -> Option<&Mat<f64>> {
        self.u.as_ref()
    }

    /// Right factor `Vt` (`k×n`, orthonormal rows) as an operator.
    pub fn vt(&self) -> &MeasurementOperator {
        &self.vt
    }

    /// `Uᵀy`.
    pub fn apply_ut(&self, y: &[f64]) -> Vec<f64> {
        match &self.u {
            None => y.to_vec(),
            Some(u) => {
                let mut out = vec![0.0; u.ncols()];
                super::operator::dense_matvec(u.as_ref().transpose(), y, &mut out);
                out
            }
        }
    }

    /// Condition number `s_max / s_min`, infinite if rank-deficient.
    pub fn condition(&self) -> f64 {
        let lo = *self.s.last().unwrap_or(&0.0);
        if lo > 0.0 {
            self.s[0] / lo
        } else {
            f64::INFINITY
        }
    }
}

fn gram_route(a: faer::MatRef<'_, f64>, m: usize, n: usize) -> Option<SvdBundle> {
    let wide = m <= n;
    let g = if wide { a * a.transpose() } else { a.transpose() * a };
    let eig = g.self_adjoint_eigen(Side::Lower).ok()?;
    let k = m.min(n);
    // ascending eigenvalues; reverse to nonincreasing order
    let lam: Vec<f64> = (0..k).rev().map(|i| eig.S()[i]).collect();
    if !(lam[k - 1] > GRAM_MIN_EIG_RATIO * lam[0]) {
        return None;
    }
    let s: Vec<f64> = lam.iter().map(|l| l.sqrt()).collect();
    let q = eig.U();
    let q = Mat::from_fn(k, k, |i, j| q[(i, k - 1 - j)]);
    if wide {
        // Vt = diag(1/s)·Qᵀ·A
        let mut vt = q.transpose() * a;
        for i in 0..k {
            let inv = s[i].recip();
            for j in 0..n {
                vt[(i, j)] *= inv;
            }
        }
        Some(SvdBundle {
            m,
            n,
            u: Some(q),
            s,
            vt: MeasurementOperator::from_dense_parts(vt, EnsembleTag::Whitened, None, None, true),
        })
    } else {
        // U = A·Q·diag(1/s), Vt = Qᵀ
        let mut u = a * &q;
        for j in 0..k {
            let inv = s[j].recip();
            for i in 0..m {
                u[(i, j)] *= inv;
            }
        }
        let vt = q.transpose().to_owned();
        Some(SvdBundle {
            m,
            n,
            u: Some(u),
            s,
            vt: MeasurementOperator::from_dense_parts(vt, EnsembleTag::Whitened, None, None, true),
        })
    }
}

/// A transformed system `operator·x = observations` with the same solutions.
#[derive(Clone, Debug)]
pub struct WhitenedProblem {
    pub operator: MeasurementOperator,
    pub observations: Vec<f64>,
}

/// `(Vt, diag(1/s)·Uᵀy)`; `Vt` has orthonormal rows.
pub fn whiten(op: &MeasurementOperator, y: &[f64]) -> Result<WhitenedProblem> {
    let svd = SvdBundle::compute(op)?;
    whiten_with(&svd, y)
}

/// [`whiten`] reusing a decomposition.
pub fn whiten_with(svd: &SvdBundle, y: &[f64]) -> Result<WhitenedProblem> {
    if y.len() != svd.m {
        return Err(Error::DimensionMismatch(format!(
            "observations have length {}, operator has {} rows",
            y.len(),
            svd.m
        )));
    }
    ensure_finite_slice("y", y)?;
    let cond = svd.condition();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateSpectrum(format!(
            "condition number {cond:e} exceeds {MAX_CONDITION:e}"
        )));
    }
    let mut obs = svd.apply_ut(y);
    for (o, s) in obs.iter_mut().zip(&svd.s) {
        *o /= s;
    }
    Ok(WhitenedProblem {
        operator: svd.vt.clone(),
        observations: obs,
    })
}

/// `(U₀Σ₀Vt, U₀Σ₀ỹ)` with `Σ₀` the singular values of a fresh `N(0, 1/n)`
/// matrix and `U₀` Haar, both drawn from `seed`.
pub fn gaussianize(wp: &WhitenedProblem, seed: u64) -> Result<WhitenedProblem> {
    let op = &wp.operator;
    let (m, n) = (op.m(), op.n());
    if m > n {
        return Err(invalid(format!("gaussianize needs m <= n, got {m}x{n}")));
    }
    if wp.observations.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "observations have length {}, operator has {m} rows",
            wp.observations.len()
        )));
    }
    check_orthonormal_rows(op, seed)?;
    let vt = op
        .dense_view()
        .ok_or_else(|| invalid("gaussianize needs a dense view of the whitened operator"))?;
    let mut rng = rng_from(seed);
    let mut s0 = gaussian_singular_values(m, n, &mut rng);
    let u0 = haar_orthonormal_columns(m, m, &mut rng);
    if s0.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateSpectrum("sampled Σ₀ has a zero singular value".into()));
    }
    let us = Mat::from_fn(m, m, |i, j| u0[(i, j)] * s0[j]);
    let a = &us * vt;
    let mut obs = vec![0.0; m];
    super::operator::dense_matvec(us.as_ref(), &wp.observations, &mut obs);
    s0.sort_by(|a, b| b.total_cmp(a));
    Ok(WhitenedProblem {
        operator: MeasurementOperator::from_dense_parts(a, EnsembleTag::Gaussianized, Some(seed), Some(s0), false),
        observations: obs,
    })
}

// ‖Vtᵀz‖ = ‖z‖ for a random probe z.
fn check_orthonormal_rows(op: &MeasurementOperator, seed: u64) -> Result<()> {
    let mut rng = rng_from(derive(seed, stream::SOLVER));
    let z: Vec<f64> = (0..op.m()).map(|_| rng.sample(StandardNormal)).collect();
    let back = op.apply_adjoint(&z)?;
    let nz: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = back.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (nb - nz).abs() > 1e-6 * nz {
        return Err(invalid("gaussianize needs an operator with orthonormal rows"));
    }
    Ok(())
}
