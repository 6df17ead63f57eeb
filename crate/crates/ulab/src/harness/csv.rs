//! Flat CSV files for grids and curves. Floats are written with six
//! significant digits, so files are byte-identical for identical inputs.

use std::io::Write;
use std::path::Path;

use super::curve::CurveRecord;
use super::spec::{EnsembleKind, RunResult};
use super::sweep::{CellSummary, PhaseGrid};
use crate::error::{Error, Result};
use crate::format::fmt_g6;

pub const SWEEP_HEADER: &str = "alpha,rho,runs,mean_mse,median_mse,success_frac,fail_frac,mean_iters";
pub const CURVE_HEADER: &str = "ensemble,rho,alpha,run,mse,iters,status";

pub fn write_sweep_csv(grid: &PhaseGrid, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for c in &grid.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_g6(c.alpha),
            fmt_g6(c.rho),
            c.runs,
            fmt_g6(c.mean_mse),
            fmt_g6(c.median_mse),
            fmt_g6(c.success_fraction),
            fmt_g6(c.failure_fraction),
            fmt_g6(c.mean_iterations)
        )?;
    }
    Ok(())
}

/// Errored runs are written with `nan` MSE, zero iterations and status `error`.
pub fn write_curve_csv(records: &[CurveRecord], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for r in records {
        let (mse, iters, status) = match &r.result {
            RunResult::Done {
                mse,
                iterations,
                status,
            } => (*mse, *iterations, status.as_str()),
            RunResult::Failed(_) => (f64::NAN, 0, "error"),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.ensemble,
            fmt_g6(r.rho),
            fmt_g6(r.alpha),
            r.run,
            fmt_g6(mse),
            iters,
            status
        )?;
    }
    Ok(())
}

/// Writes through `write` into a file, creating parent directories. An
/// unwritable path is reported as a configuration error.
pub fn write_file(path: &Path, write: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
    let bad = |e: std::io::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(bad)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(bad)?);
    write(&mut w)?;
    w.flush().map_err(bad)?;
    Ok(())
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}:{line}: bad number '{s}'", path.display())))
}

fn parse_usize(s: &str, path: &Path, line: usize) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}:{line}: bad count '{s}'", path.display())))
}

/// Reads a grid written by [`write_sweep_csv`]. The grid axes are the
/// distinct `α` and `ρ` values; every combination must be present once.
pub fn read_sweep_csv(path: &Path) -> Result<PhaseGrid> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SWEEP_HEADER => {}
        _ => {
            return Err(Error::Config(format!(
                "{}: expected header '{SWEEP_HEADER}'",
                path.display()
            )))
        }
    }
    let mut cells = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Config(format!(
                "{}:{}: expected 8 fields",
                path.display(),
                k + 1
            )));
        }
        let num = |i: usize| parse_f64(f[i], path, k + 1);
        cells.push(CellSummary {
            alpha: num(0)?,
            rho: num(1)?,
            runs: parse_usize(f[2], path, k + 1)?,
            mean_mse: num(3)?,
            median_mse: num(4)?,
            success_fraction: num(5)?,
            failure_fraction: num(6)?,
            mean_iterations: num(7)?,
            errors: 0,
        });
    }
    if cells.is_empty() {
        return Err(Error::Config(format!("{}: no grid cells", path.display())));
    }
    let axis = |get: fn(&CellSummary) -> f64| {
        let mut v: Vec<f64> = cells.iter().map(get).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let alpha_grid = axis(|c| c.alpha);
    let rho_grid = axis(|c| c.rho);
    let na = alpha_grid.len();
    if cells.len() != na * rho_grid.len() {
        return Err(Error::Config(format!(
            "{}: {} cells do not fill a {}x{} grid",
            path.display(),
            cells.len(),
            rho_grid.len(),
            na
        )));
    }
    let mut slots: Vec<Option<CellSummary>> = vec![None; cells.len()];
    for c in cells {
        let i = rho_grid.iter().position(|&r| r == c.rho).expect("axis value");
        let j = alpha_grid.iter().position(|&a| a == c.alpha).expect("axis value");
        let slot = &mut slots[i * na + j];
        if slot.is_some() {
            return Err(Error::Config(format!(
                "{}: duplicate cell alpha={} rho={}",
                path.display(),
                c.alpha,
                c.rho
            )));
        }
        *slot = Some(c);
    }
    Ok(PhaseGrid {
        alpha_grid,
        rho_grid,
        cells: slots.into_iter().map(|c| c.expect("filled")).collect(),
    })
}

/// One parsed row of a curve file.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub ensemble: EnsembleKind,
    pub rho: f64,
    pub alpha: f64,
    pub run: usize,
    pub mse: f64,
    pub iters: usize,
    pub status: String,
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_HEADER => {}
        _ => {
            return Err(Error::Config(format!(
                "{}: expected header '{CURVE_HEADER}'",
                path.display()
            )))
        }
    }
    let mut out = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Config(format!(
                "{}:{}: expected 7 fields",
                path.display(),
                k + 1
            )));
        }
        out.push(CurveRow {
            ensemble: f[0].parse()?,
            rho: parse_f64(f[1], path, k + 1)?,
            alpha: parse_f64(f[2], path, k + 1)?,
            run: parse_usize(f[3], path, k + 1)?,
            mse: parse_f64(f[4], path, k + 1)?,
            iters: parse_usize(f[5], path, k + 1)?,
            status: f[6].to_string(),
        });
    }
    Ok(out)
}
