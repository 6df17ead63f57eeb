//! Reference computations written independently of the library code paths
//! they check.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Entry `(j, k)` of the orthonormal cosine matrix whose first column is
/// constant: `√(2/n)·ε_k·cos(π(2j+1)k/2n)` with `ε_0 = 1/√2`.
pub fn dct_entry(n: usize, j: usize, k: usize) -> f64 {
    let eps = if k == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
    (2.0 / n as f64).sqrt() * eps * (PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64).cos()
}

pub fn dct_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|j| (0..n).map(|k| dct_entry(n, j, k)).collect()).collect()
}

/// Sylvester-ordered Hadamard matrix scaled by `1/√n`.
pub fn hadamard_matrix(n: usize) -> Vec<Vec<f64>> {
    let s = (n as f64).sqrt().recip();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
                .collect()
        })
        .collect()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Dense copy of an operator's matrix, obtained through `apply` on unit vectors.
pub fn dense_by_probing(op: &ulab::ensembles::MeasurementOperator) -> Vec<Vec<f64>> {
    let (m, n) = (op.m(), op.n());
    let mut a = vec![vec![0.0; n]; m];
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = op.apply(&e).unwrap();
        for i in 0..m {
            a[i][k] = col[i];
        }
        e[k] = 0.0;
    }
    a
}

fn gauss_density(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

/// Composite Simpson rule with `intervals` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Posterior mean and variance of `x ~ (1−ρ)δ₀ + ρN(0,1)` given
/// `r = x + N(0, τ²)`, by direct integration over the slab.
pub fn bayes_posterior_oracle(r: f64, tau2: f64, rho: f64) -> (f64, f64) {
    let c = r / (1.0 + tau2);
    let s = (tau2 / (1.0 + tau2)).sqrt();
    let (lo, hi) = (c - 15.0 * s, c + 15.0 * s);
    let joint = |x: f64| gauss_density(x, 1.0) * gauss_density(r - x, tau2);
    let z1 = simpson(joint, lo, hi, 20_000);
    let m1 = simpson(|x| x * joint(x), lo, hi, 20_000);
    let s1 = simpson(|x| x * x * joint(x), lo, hi, 20_000);
    let z = (1.0 - rho) * gauss_density(r, tau2) + rho * z1;
    let mean = rho * m1 / z;
    (mean, rho * s1 / z - mean * mean)
}

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via the complementary error function of `libm`.
pub fn big_phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Soft-threshold minimax risk bound whose minimum over `κ` is the
/// Donoho–Tanner critical `α`.
pub fn dt_objective(kappa: f64, rho: f64) -> f64 {
    (1.0 - rho) * 2.0 * ((1.0 + kappa * kappa) * big_phi(-kappa) - kappa * phi(kappa)) + rho * (1.0 + kappa * kappa)
}

/// `min_κ` of [`dt_objective`] by a coarse scan and golden-section refinement.
pub fn dt_alpha(rho: f64) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=400 {
        let k = i as f64 * 0.01;
        let v = dt_objective(k, rho);
        if v < best.0 {
            best = (v, k);
        }
    }
    let (mut a, mut b) = ((best.1 - 0.01f64).max(0.0), best.1 + 0.01);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if dt_objective(c, rho) < dt_objective(d, rho) {
            b = d;
        } else {
            a = c;
        }
    }
    dt_objective(0.5 * (a + b), rho)
}

/// Critical `α` of the Bayes-optimal recursion, tabulated from an independent
/// implementation of the scalar state evolution.
pub const BAYES_LINE: [(f64, f64); 10] = [
    (0.1, 0.20767),
    (0.2, 0.35508),
    (0.25, 0.42029),
    (0.3, 0.48013),
    (0.4, 0.58955),
    (0.5, 0.68604),
    (0.6, 0.77148),
    (0.7, 0.84619),
    (0.8, 0.91133),
    (0.9, 0.96445),
];

/// Solves the symmetric positive definite system `a·x = b` by Cholesky.
pub fn spd_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    x
}
