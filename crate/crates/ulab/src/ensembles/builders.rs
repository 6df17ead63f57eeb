use faer::Mat;
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::operator::{Activation, EnsembleTag, MeasurementOperator};
use super::transforms::{DctRows, HadamardRows};
use crate::error::{invalid, Result};
use crate::rng::{rng_from, Rng};

/// Cap on materialized entries, `m·n`.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(invalid(format!("dimensions must be positive, got {m}x{n}")));
    }
    match m.checked_mul(n) {
        Some(e) if e <= MAX_DENSE_ENTRIES => Ok(()),
        _ => Err(invalid(format!(
            "matrix {m}x{n} exceeds the {MAX_DENSE_ENTRIES}-entry limit"
        ))),
    }
}

fn check_subsample(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    Ok(())
}

fn check_pow2(n: usize, what: &str) -> Result<()> {
    if n.is_power_of_two() {
        Ok(())
    } else {
        Err(invalid(format!("{what} requires n to be a power of two, got n={n}")))
    }
}

pub(crate) fn gaussian_mat(m: usize, n: usize, std: f64, rng: &mut Rng) -> Mat<f64> {
    // column-major fill order, fixed for reproducibility
    Mat::from_fn(m, n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

/// Uniform `m`-subset of `0..n`, sorted.
fn subsample_rows(m: usize, n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut rows = index::sample(rng, n, m).into_vec();
    rows.sort_unstable();
    rows
}

/// I.i.d. `N(0, 1/n)` entries.
pub fn build_gaussian(m: usize, n: usize, seed: u64) -> Result<MeasurementOperator> {
    check_dims(m, n)?;
    let mut rng = rng_from(seed);
    let a = gaussian_mat(m, n, (n as f64).sqrt().recip(), &mut rng);
    Ok(MeasurementOperator::from_dense(a, EnsembleTag::Gaussian, Some(seed)))
}

/// `m` distinct uniformly chosen rows of the orthonormal `n×n` DCT.
pub fn build_subsampled_dct(m: usize, n: usize, seed: u64) -> Result<MeasurementOperator> {
    check_subsample(m, n)?;
    let mut rng = rng_from(seed);
    let rows = subsample_rows(m, n, &mut rng);
    Ok(MeasurementOperator::from_dct(DctRows::new(n, rows), seed))
}

/// `m` distinct uniformly chosen rows of the Sylvester Hadamard matrix `H_n/√n`.
pub fn build_hadamard(m: usize, n: usize, seed: u64) -> Result<MeasurementOperator> {
    check_pow2(n, "the Hadamard ensemble")?;
    check_subsample(m, n)?;
    let mut rng = rng_from(seed);
    let rows = subsample_rows(m, n, &mut rng);
    Ok(MeasurementOperator::from_hadamard(HadamardRows::new(n, rows), seed))
}

/// `Φ = f(WX)` with `W ~ N(0, 1/n)` of size `m×n` and `X ~ N(0, 1)` of size `n×n`,
/// so the pre-activations are approximately standard normal.
///
/// With `standardize`, columns are centered and the matrix is scaled to unit
/// mean column norm.
pub fn build_random_features(
    m: usize,
    n: usize,
    activation: Activation,
    seed: u64,
    standardize: bool,
) -> Result<MeasurementOperator> {
    check_dims(m, n)?;
    check_dims(n, n)?;
    let mut rng = rng_from(seed);
    let w = gaussian_mat(m, n, (n as f64).sqrt().recip(), &mut rng);
    let x = gaussian_mat(n, n, 1.0, &mut rng);
    let mut a = &w * &x;
    for j in 0..n {
        for i in 0..m {
            a[(i, j)] = activation.apply(a[(i, j)]);
        }
    }
    if standardize {
        for j in 0..n {
            let mean = (0..m).map(|i| a[(i, j)]).sum::<f64>() / m as f64;
            for i in 0..m {
                a[(i, j)] -= mean;
            }
        }
        let f = a.norm_l2();
        if f > 0.0 {
            let scale = (n as f64).sqrt() / f;
            for j in 0..n {
                for i in 0..m {
                    a[(i, j)] *= scale;
                }
            }
        }
    }
    Ok(MeasurementOperator::from_dense(
        a,
        EnsembleTag::RandomFeatures(activation),
        Some(seed),
    ))
}

/// Unscaled `W_n` from `W₂ = [[1,1],[1,−1]]`, `W_{2k} = [W_k ⊗ [1,−1]; I_k ⊗ [1,1]]`.
pub fn haar_wavelet_matrix(n: usize) -> Result<Mat<f64>> {
    check_pow2(n, "the Haar-wavelet ensemble")?;
    if n < 2 {
        return Err(invalid("the Haar-wavelet ensemble requires n >= 2"));
    }
    let mut w = Mat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { -1.0 } else { 1.0 });
    let mut k = 2;
    while k < n {
        let mut next = Mat::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                next[(i, 2 * j)] = w[(i, j)];
                next[(i, 2 * j + 1)] = -w[(i, j)];
            }
            next[(k + i, 2 * i)] = 1.0;
            next[(k + i, 2 * i + 1)] = 1.0;
        }
        w = next;
        k *= 2;
    }
    Ok(w)
}

/// Uniformly subsampled rows of `W_n/√n`.
pub fn build_haar_wavelet(m: usize, n: usize, seed: u64) -> Result<MeasurementOperator> {
    build_haar_wavelet_with(m, n, seed, false)
}

/// As [`build_haar_wavelet`]; `normalize_rows` rescales each row to unit norm
/// instead of the global `1/√n`.
pub fn build_haar_wavelet_with(m: usize, n: usize, seed: u64, normalize_rows: bool) -> Result<MeasurementOperator> {
    check_pow2(n, "the Haar-wavelet ensemble")?;
    check_subsample(m, n)?;
    check_dims(m, n)?;
    let w = haar_wavelet_matrix(n)?;
    let mut rng = rng_from(seed);
    let rows = subsample_rows(m, n, &mut rng);
    let global = (n as f64).sqrt().recip();
    let mut a = Mat::zeros(m, n);
    for (i, &r) in rows.iter().enumerate() {
        let scale = if normalize_rows {
            let nnz = (0..n).filter(|&j| w[(r, j)] != 0.0).count();
            (nnz as f64).sqrt().recip()
        } else {
            global
        };
        for j in 0..n {
            a[(i, j)] = scale * w[(r, j)];
        }
    }
    Ok(MeasurementOperator::from_dense(a, EnsembleTag::HaarWavelet, Some(seed)))
}

/// Singular values for [`build_rot_invariant`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSpec {
    /// Explicit `min(m, n)` values, any order.
    Values { values: Vec<f64> },
    /// All singular values equal.
    Constant { value: f64 },
    /// Singular values of a fresh `N(0, 1/n)` matrix of the same shape.
    GaussianLike,
}

/// Columns of a Haar-distributed orthogonal matrix: QR of a Gaussian `n×k`
/// matrix with the signs of `diag(R)` moved into `Q`.
pub fn haar_orthonormal_columns(n: usize, k: usize, rng: &mut Rng) -> Mat<f64> {
    assert!(k <= n && k >= 1);
    let g = gaussian_mat(n, k, 1.0, rng);
    let qr = g.qr();
    let mut q = qr.compute_thin_Q();
    let r = qr.thin_R();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Singular values of `B` (`m×n`, i.i.d. `N(0, 1/n)`), nonincreasing.
pub(crate) fn gaussian_singular_values(m: usize, n: usize, rng: &mut Rng) -> Vec<f64> {
    let b = gaussian_mat(m, n, (n as f64).sqrt().recip(), rng);
    let mut s = b.singular_values().expect("singular values of a finite matrix");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `Φ = UΣVᵀ` with independent Haar `U`, `V`; thin factors when `m ≠ n`.
pub fn build_rot_invariant(m: usize, n: usize, spectrum: &SpectrumSpec, seed: u64) -> Result<MeasurementOperator> {
    check_dims(m, n)?;
    let k = m.min(n);
    let mut rng = rng_from(seed);
    let mut s = match spectrum {
        SpectrumSpec::Values { values } => {
            if values.len() != k {
                return Err(invalid(format!(
                    "spectrum needs min(m,n) = {k} values, got {}",
                    values.len()
                )));
            }
            values.clone()
        }
        SpectrumSpec::Constant { value } => vec![*value; k],
        SpectrumSpec::GaussianLike => gaussian_singular_values(m, n, &mut rng),
    };
    if let Some(bad) = s.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(invalid(format!(
            "singular values must be finite and nonnegative, got {bad}"
        )));
    }
    s.sort_by(|a, b| b.total_cmp(a));
    let u = haar_orthonormal_columns(m, k, &mut rng);
    let v = haar_orthonormal_columns(n, k, &mut rng);
    let us = Mat::from_fn(m, k, |i, j| u[(i, j)] * s[j]);
    let a = &us * v.transpose();
    let row_orthonormal = m <= n && s.iter().all(|&x| x == 1.0);
    Ok(MeasurementOperator::from_dense_parts(
        a,
        EnsembleTag::RotInvariant,
        Some(seed),
        Some(s),
        row_orthonormal,
    ))
}
