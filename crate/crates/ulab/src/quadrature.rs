//! Composite Gauss–Legendre rules for expectations over a standard normal.
//!
//! Denoiser expectations have features (thresholds, responsibility switches)
//! whose width scales with the channel noise, so the mesh is graded
//! geometrically toward a caller-supplied feature scale near the origin and
//! is uniform farther out.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1);
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_k(x) and P_k'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule for `E[f(g)]`, `g ~ N(0,1)`, with `f` even.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Uniform panel width away from the origin.
    pub panel_width: f64,
    /// Integration cut-off; the Gaussian tail beyond it is below 1e-32.
    pub half_width: f64,
    /// Ratio between consecutive graded panels.
    pub grading: f64,
    /// First graded panel as a fraction of the feature scale.
    pub fine_fraction: f64,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(8, 0.25, 12.0, 1.2, 1.0 / 16.0)
    }
}

impl QuadratureRule {
    pub fn new(nodes_per_panel: usize, panel_width: f64, half_width: f64, grading: f64, fine_fraction: f64) -> Self {
        assert!(panel_width > 0.0 && half_width > panel_width && grading > 1.0 && fine_fraction > 0.0);
        let (nodes, weights) = gauss_legendre(nodes_per_panel);
        Self {
            nodes,
            weights,
            panel_width,
            half_width,
            grading,
            fine_fraction,
        }
    }

    /// The same family with twice the nodes per panel and a finer mesh.
    pub fn refined(&self) -> Self {
        Self::new(
            2 * self.nodes.len(),
            self.panel_width / 2.0,
            self.half_width,
            self.grading.sqrt(),
            self.fine_fraction / 2.0,
        )
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes.len()
    }

    /// Panel breakpoints on `[0, half_width]`, graded from `feature_scale`
    /// and always containing each of `kinks` inside the range.
    fn breakpoints(&self, feature_scale: f64, kinks: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0];
        let h0 = self.fine_fraction * feature_scale;
        if h0 > 0.0 && h0 < self.panel_width {
            let mut x = h0;
            while x < self.panel_width {
                b.push(x);
                x *= self.grading;
            }
        }
        let mut x = self.panel_width;
        while x < self.half_width {
            b.push(x);
            x += self.panel_width;
        }
        b.push(self.half_width);
        for &k in kinks {
            if k > 0.0 && k < self.half_width {
                b.push(k);
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, c| (*a - *c).abs() <= 1e-15 * c.abs().max(1e-300));
        b
    }

    /// `E[f(g)]` for even `f`.
    pub fn expect_even(&self, f: impl Fn(f64) -> f64, feature_scale: f64, kinks: &[f64]) -> f64 {
        let b = self.breakpoints(feature_scale, kinks);
        let norm = (2.0 * PI).sqrt().recip();
        let mut total = 0.0;
        for w in b.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut panel = 0.0;
            for (&t, &wt) in self.nodes.iter().zip(&self.weights) {
                let g = mid + half * t;
                panel += wt * f(g) * (-0.5 * g * g).exp();
            }
            total += half * panel;
        }
        2.0 * norm * total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for k in [1, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(k);
            for p in 0..(2 * k) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "k={k} p={p}");
            }
        }
    }

    #[test]
    fn gaussian_moments() {
        let rule = QuadratureRule::default();
        assert!((rule.expect_even(|_| 1.0, 1.0, &[]) - 1.0).abs() < 1e-14);
        assert!((rule.expect_even(|g| g * g, 1.0, &[]) - 1.0).abs() < 1e-13);
        assert!((rule.expect_even(|g| g.powi(4), 1e-6, &[0.3]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn resolves_a_narrow_step() {
        // P(|g| > c) with a kink supplied
        let rule = QuadratureRule::default();
        let c: f64 = 1e-5;
        let p = rule.expect_even(|g| if g > c { 1.0 } else { 0.0 }, c, &[c]);
        let exact = libm::erfc(c / 2f64.sqrt());
        assert!((p - exact).abs() < 1e-13);
    }
}
