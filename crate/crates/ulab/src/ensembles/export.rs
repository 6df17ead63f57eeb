//! Binary matrix export: a 16-byte little-endian header (`"ULAB"`, `u32 m`,
//! `u32 n`, `u32` format version) followed by `m·n` row-major `f64` values,
//! plus a JSON sidecar with the provenance label and seed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::operator::MeasurementOperator;
use crate::error::{invalid, Error, Result};

pub const MAGIC: &[u8; 4] = b"ULAB";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub ensemble_tag: String,
    pub seed: Option<u64>,
    pub m: usize,
    pub n: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes `path` and `path.json`.
pub fn export_matrix(op: &MeasurementOperator, path: &Path) -> Result<()> {
    let a = op
        .dense_view()
        .ok_or_else(|| invalid("operator has no dense view to export"))?;
    let (m, n) = (op.m(), op.n());
    let (m32, n32) = (
        u32::try_from(m).map_err(|_| invalid("m does not fit the u32 header"))?,
        u32::try_from(n).map_err(|_| invalid("n does not fit the u32 header"))?,
    );
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&m32.to_le_bytes())?;
    w.write_all(&n32.to_le_bytes())?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for i in 0..m {
        for j in 0..n {
            w.write_all(&a[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    let side = MatrixSidecar {
        ensemble_tag: op.tag().to_string(),
        seed: op.seed(),
        m,
        n,
    };
    let json = serde_json::to_string_pretty(&side).map_err(|e| invalid(e.to_string()))?;
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

/// Reads a matrix written by [`export_matrix`].
pub fn import_matrix(path: &Path) -> Result<Mat<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::InvalidParameter(format!(
            "{} is not a ULAB matrix file",
            path.display()
        )));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap()) as usize;
    let (m, n) = (word(4), word(8));
    let mut a = Mat::zeros(m, n);
    let mut buf = [0u8; 8];
    for i in 0..m {
        for j in 0..n {
            r.read_exact(&mut buf)?;
            a[(i, j)] = f64::from_le_bytes(buf);
        }
    }
    Ok(a)
}
