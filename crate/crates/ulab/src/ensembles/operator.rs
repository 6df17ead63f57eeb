use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use faer::{Accum, Mat, MatMut, MatRef, Par};
use serde::{Deserialize, Serialize};

use super::transforms::{DctRows, HadamardRows};
use crate::error::{Error, Result};

/// Largest `n` for which fast-path operators materialize a dense view.
pub const MAX_DENSE_N: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sign,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sign => {
                if x >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sign => "sign",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sign" => Ok(Activation::Sign),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidParameter(format!(
                "unknown activation '{other}' (expected relu, sign or tanh)"
            ))),
        }
    }
}

/// Provenance label of an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnsembleTag {
    Gaussian,
    SubsampledDct,
    Hadamard,
    RandomFeatures(Activation),
    HaarWavelet,
    RotInvariant,
    Whitened,
    Gaussianized,
    Dense,
}

impl fmt::Display for EnsembleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleTag::Gaussian => f.write_str("gaussian"),
            EnsembleTag::SubsampledDct => f.write_str("dct"),
            EnsembleTag::Hadamard => f.write_str("hadamard"),
            EnsembleTag::RandomFeatures(a) => write!(f, "rfm-{a}"),
            EnsembleTag::HaarWavelet => f.write_str("haar-wavelet"),
            EnsembleTag::RotInvariant => f.write_str("rot-invariant"),
            EnsembleTag::Whitened => f.write_str("whitened"),
            EnsembleTag::Gaussianized => f.write_str("gaussianized"),
            EnsembleTag::Dense => f.write_str("dense"),
        }
    }
}

enum Kind {
    Dense(Mat<f64>),
    Dct(DctRows),
    Hadamard(HadamardRows),
}

struct Inner {
    m: usize,
    n: usize,
    kind: Kind,
    singular_values: Option<Vec<f64>>,
    tag: EnsembleTag,
    seed: Option<u64>,
    row_orthonormal: bool,
    dense_cache: OnceLock<Mat<f64>>,
}

/// An immutable `m×n` linear map, cheap to clone and share across threads.
#[derive(Clone)]
pub struct MeasurementOperator(Arc<Inner>);

impl fmt::Debug for MeasurementOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementOperator")
            .field("m", &self.0.m)
            .field("n", &self.0.n)
            .field("tag", &self.0.tag)
            .field("seed", &self.0.seed)
            .field("fast_path", &self.has_fast_path())
            .finish()
    }
}

impl MeasurementOperator {
    pub fn from_dense(mat: Mat<f64>, tag: EnsembleTag, seed: Option<u64>) -> Self {
        Self::build(mat.nrows(), mat.ncols(), Kind::Dense(mat), tag, seed, None, false)
    }

    pub(crate) fn from_dense_parts(
        mat: Mat<f64>,
        tag: EnsembleTag,
        seed: Option<u64>,
        singular_values: Option<Vec<f64>>,
        row_orthonormal: bool,
    ) -> Self {
        Self::build(
            mat.nrows(),
            mat.ncols(),
            Kind::Dense(mat),
            tag,
            seed,
            singular_values,
            row_orthonormal,
        )
    }

    pub(crate) fn from_dct(rows: DctRows, seed: u64) -> Self {
        let (m, n) = (rows.m(), rows.n());
        Self::build(
            m,
            n,
            Kind::Dct(rows),
            EnsembleTag::SubsampledDct,
            Some(seed),
            Some(vec![1.0; m]),
            true,
        )
    }

    pub(crate) fn from_hadamard(rows: HadamardRows, seed: u64) -> Self {
        let (m, n) = (rows.m(), rows.n());
        Self::build(
            m,
            n,
            Kind::Hadamard(rows),
            EnsembleTag::Hadamard,
            Some(seed),
            Some(vec![1.0; m]),
            true,
        )
    }

    fn build(
        m: usize,
        n: usize,
        kind: Kind,
        tag: EnsembleTag,
        seed: Option<u64>,
        singular_values: Option<Vec<f64>>,
        row_orthonormal: bool,
    ) -> Self {
        Self(Arc::new(Inner {
            m,
            n,
            kind,
            singular_values,
            tag,
            seed,
            row_orthonormal,
            dense_cache: OnceLock::new(),
        }))
    }

    pub fn m(&self) -> usize {
        self.0.m
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    /// `α = m/n`.
    pub fn alpha(&self) -> f64 {
        self.0.m as f64 / self.0.n as f64
    }

    pub fn tag(&self) -> EnsembleTag {
        self.0.tag
    }

    pub fn seed(&self) -> Option<u64> {
        self.0.seed
    }

    /// Nonincreasing singular values, when known without a decomposition.
    pub fn singular_values(&self) -> Option<&[f64]> {
        self.0.singular_values.as_deref()
    }

    pub fn has_fast_path(&self) -> bool {
        !matches!(self.0.kind, Kind::Dense(_))
    }

    /// True when `ΦΦᵀ = I` holds by construction.
    pub fn row_orthonormal(&self) -> bool {
        self.0.row_orthonormal
    }

    /// Dense matrix; fast-path operators materialize it once, up to
    /// [`MAX_DENSE_N`] columns.
    pub fn dense_view(&self) -> Option<MatRef<'_, f64>> {
        match &self.0.kind {
            Kind::Dense(a) => Some(a.as_ref()),
            _ if self.0.n > MAX_DENSE_N => None,
            _ => Some(
                self.0
                    .dense_cache
                    .get_or_init(|| {
                        let (m, n) = (self.0.m, self.0.n);
                        let mut a = Mat::zeros(m, n);
                        let mut e = vec![0.0; n];
                        let mut col = vec![0.0; m];
                        for j in 0..n {
                            e[j] = 1.0;
                            self.apply_into(&e, &mut col);
                            e[j] = 0.0;
                            for i in 0..m {
                                a[(i, j)] = col[i];
                            }
                        }
                        a
                    })
                    .as_ref(),
            ),
        }
    }

    fn check_len(&self, what: &str, got: usize, want: usize) -> Result<()> {
        if got == want {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what} has length {got}, operator expects {want}"
            )))
        }
    }

    /// `Φx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len("input", x.len(), self.0.n)?;
        let mut out = vec![0.0; self.0.m];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `Φᵀy`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len("input", y.len(), self.0.m)?;
        let mut out = vec![0.0; self.0.n];
        self.apply_adjoint_into(y, &mut out);
        Ok(out)
    }

    /// `out ← Φx`. Panics on length mismatch.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert!(x.len() == self.0.n && out.len() == self.0.m, "operator length mismatch");
        match &self.0.kind {
            Kind::Dense(a) => dense_matvec(a.as_ref(), x, out),
            Kind::Dct(d) => d.forward(x, out),
            Kind::Hadamard(h) => h.forward(x, out),
        }
    }

    /// `out ← Φᵀy`. Panics on length mismatch.
    pub fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert!(y.len() == self.0.m && out.len() == self.0.n, "operator length mismatch");
        match &self.0.kind {
            Kind::Dense(a) => dense_matvec(a.as_ref().transpose(), y, out),
            Kind::Dct(d) => d.adjoint(y, out),
            Kind::Hadamard(h) => h.adjoint(y, out),
        }
    }

    /// `‖Φ‖_F²`, exact for every representation.
    pub fn frobenius_sq(&self) -> f64 {
        match &self.0.kind {
            Kind::Dense(a) => {
                let f = a.norm_l2();
                f * f
            }
            _ => self.0.m as f64,
        }
    }
}

pub(crate) fn dense_matvec(a: MatRef<'_, f64>, x: &[f64], out: &mut [f64]) {
    let rhs = MatRef::from_column_major_slice(x, x.len(), 1);
    let dst = MatMut::from_column_major_slice_mut(out, a.nrows(), 1);
    faer::linalg::matmul::matmul(dst, Accum::Replace, a, rhs, 1.0, Par::Seq);
}
