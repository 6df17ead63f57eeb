use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_finite_slice, invalid, Result};

/// Eigenvalues of `ΦᵀΦ` over an `n`-point spectrum; entries not listed are
/// implicit zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    dimension: usize,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>, dimension: usize) -> Result<Self> {
        ensure_finite_slice("eigenvalues", &eigenvalues)?;
        if eigenvalues.iter().any(|&l| l < 0.0) {
            return Err(invalid("eigenvalues must be nonnegative"));
        }
        if dimension == 0 || eigenvalues.len() > dimension {
            return Err(invalid(format!(
                "{} eigenvalues do not fit a spectrum of dimension {dimension}",
                eigenvalues.len()
            )));
        }
        Ok(Self { eigenvalues, dimension })
    }

    /// The spectrum `{sᵢ²} ∪ {0}^(n−k)`.
    pub fn from_singular_values(s: &[f64], n: usize) -> Result<Self> {
        Self::new(s.iter().map(|v| v * v).collect(), n)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of implicit zeros.
    pub fn padding(&self) -> usize {
        self.dimension - self.eigenvalues.len()
    }

    fn min_eigenvalue(&self) -> f64 {
        let listed = self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if self.padding() > 0 {
            listed.min(0.0)
        } else {
            listed
        }
    }
}

/// `S(r) = (1/n)·Σᵢ 1/(λᵢ − r)` for `r` strictly below the whole spectrum.
pub fn stieltjes(spectrum: &Spectrum, r: f64) -> Result<f64> {
    ensure_finite("r", r)?;
    let lo = spectrum.min_eigenvalue();
    if r >= lo - 1e-14 {
        return Err(invalid(format!(
            "stieltjes argument {r} is not below the spectrum (minimum eigenvalue {lo})"
        )));
    }
    let listed: f64 = spectrum.eigenvalues.iter().map(|&l| 1.0 / (l - r)).sum();
    let zeros = spectrum.padding() as f64 / -r;
    Ok((listed + zeros) / spectrum.dimension as f64)
}
