//! Measurement-matrix ensembles behind a uniform operator type, plus the
//! spectral transforms built on their SVD.
//!
//! Scaling: i.i.d. ensembles have entry variance `1/n`; row-orthonormal
//! ensembles satisfy `ΦΦᵀ = I`.

mod builders;
mod export;
mod operator;
mod stieltjes;
mod svd;
mod transforms;

pub use builders::{
    build_gaussian, build_haar_wavelet, build_haar_wavelet_with, build_hadamard, build_random_features,
    build_rot_invariant, build_subsampled_dct, haar_orthonormal_columns, haar_wavelet_matrix, SpectrumSpec,
    MAX_DENSE_ENTRIES,
};
pub use export::{export_matrix, import_matrix, sidecar_path, MatrixSidecar, FORMAT_VERSION, MAGIC};
pub use operator::{Activation, EnsembleTag, MeasurementOperator, MAX_DENSE_N};
pub use stieltjes::{stieltjes, Spectrum};
pub use svd::{gaussianize, whiten, whiten_with, SvdBundle, WhitenedProblem, MAX_CONDITION};
pub use transforms::fwht;
