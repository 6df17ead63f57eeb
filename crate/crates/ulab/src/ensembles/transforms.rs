//! Row-subsampled orthonormal transforms with `O(n log n)` application.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

/// In-place unnormalized fast Walsh–Hadamard transform in Sylvester order.
/// `buf.len()` must be a power of two.
pub fn fwht(buf: &mut [f64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in buf.chunks_exact_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = u + v;
                *y = u - v;
            }
        }
        h *= 2;
    }
}

/// Rows `rows` of the orthonormal matrix `Y_{jk} = √(2/n)·ε_k·cos(π(2j+1)k/2n)`.
///
/// `Yx` is an orthonormal DCT-III and `Yᵀy` an orthonormal DCT-II.
pub(crate) struct DctRows {
    n: usize,
    rows: Vec<usize>,
    plan: Arc<dyn TransformType2And3<f64>>,
}

impl DctRows {
    pub(crate) fn new(n: usize, rows: Vec<usize>) -> Self {
        let plan = DctPlanner::new().plan_dct2(n);
        Self { n, rows, plan }
    }

    pub(crate) fn m(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn forward(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = x.to_vec();
        buf[0] *= SQRT_2;
        self.plan.process_dct3(&mut buf);
        let scale = (2.0 / self.n as f64).sqrt();
        for (o, &r) in out.iter_mut().zip(&self.rows) {
            *o = scale * buf[r];
        }
    }

    pub(crate) fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&v, &r) in y.iter().zip(&self.rows) {
            out[r] = v;
        }
        self.plan.process_dct2(out);
        let scale = (2.0 / self.n as f64).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
        out[0] /= SQRT_2;
    }
}

/// Rows `rows` of `H_n/√n` (Sylvester order).
pub(crate) struct HadamardRows {
    n: usize,
    rows: Vec<usize>,
}

impl HadamardRows {
    pub(crate) fn new(n: usize, rows: Vec<usize>) -> Self {
        Self { n, rows }
    }

    pub(crate) fn m(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn forward(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = x.to_vec();
        fwht(&mut buf);
        let scale = (self.n as f64).sqrt().recip();
        for (o, &r) in out.iter_mut().zip(&self.rows) {
            *o = scale * buf[r];
        }
    }

    // H is symmetric
    pub(crate) fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&v, &r) in y.iter().zip(&self.rows) {
            out[r] = v;
        }
        fwht(out);
        let scale = (self.n as f64).sqrt().recip();
        out.iter_mut().for_each(|v| *v *= scale);
    }
}
