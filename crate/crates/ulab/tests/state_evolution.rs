mod common;

use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::StandardNormal;
use ulab::denoise::{bayes_gb_denoise, soft_threshold, Denoiser};
use ulab::lines::{
    critical_alpha, critical_alpha_with, phase_line, se_converges, DenoiserPolicy, LineMethod, SeSettings,
};
use ulab::rng::rng_from;
use ulab::se::se_psi;

/// `E[(η(X + sZ) − X)²]` by plain sampling; returns the estimate and its
/// standard error.
fn psi_monte_carlo(sigma2: f64, alpha: f64, rho: f64, den: &Denoiser, samples: usize, seed: u64) -> (f64, f64) {
    let s = (sigma2 / alpha).sqrt();
    let mut rng = rng_from(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let x: f64 = if rng.random::<f64>() < rho {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        let z: f64 = rng.sample(StandardNormal);
        let r = x + s * z;
        let eta = match *den {
            Denoiser::SoftThreshold { kappa } => soft_threshold(r, kappa * s).0,
            Denoiser::BayesGaussBernoulli { rho } => bayes_gb_denoise(r, s * s, rho).unwrap().0,
        };
        let e = (eta - x) * (eta - x);
        sum += e;
        sum2 += e * e;
    }
    let mean = sum / samples as f64;
    let var = sum2 / samples as f64 - mean * mean;
    (mean, (var / samples as f64).sqrt())
}

#[test]
fn psi_matches_monte_carlo() {
    let cases = [
        (0.2, 0.5, 0.2, Denoiser::BayesGaussBernoulli { rho: 0.2 }),
        (0.05, 0.6, 0.3, Denoiser::BayesGaussBernoulli { rho: 0.3 }),
        (0.2, 0.5, 0.2, Denoiser::SoftThreshold { kappa: 1.2 }),
        (0.01, 0.4, 0.1, Denoiser::SoftThreshold { kappa: 0.7 }),
    ];
    for (k, (sigma2, alpha, rho, den)) in cases.into_iter().enumerate() {
        let psi = se_psi(sigma2, &den, alpha, rho).unwrap();
        let (mc, se) = psi_monte_carlo(sigma2, alpha, rho, &den, 400_000, 100 + k as u64);
        assert!(
            (psi - mc).abs() < 4.0 * se,
            "{den:?} sigma2={sigma2}: {psi} vs {mc} ± {se}"
        );
    }
}

#[test]
fn psi_vanishes_at_zero_noise() {
    for den in [
        Denoiser::BayesGaussBernoulli { rho: 0.3 },
        Denoiser::SoftThreshold { kappa: 1.0 },
    ] {
        assert!(se_psi(0.0, &den, 0.5, 0.3).unwrap().abs() < 1e-14);
    }
}

#[test]
fn donoho_tanner_line_matches_closed_form() {
    for &rho in &[0.1, 0.25, 0.5, 0.7] {
        let got = critical_alpha(rho, LineMethod::DonohoTanner).unwrap();
        let want = common::dt_alpha(rho);
        assert!((got - want).abs() < 2e-3, "rho={rho}: {got} vs {want}");
    }
}

#[test]
fn bayes_line_matches_reference_table() {
    let rhos: Vec<f64> = common::BAYES_LINE.iter().map(|p| p.0).collect();
    let line = phase_line(LineMethod::BayesHard, &rhos, &SeSettings::default()).unwrap();
    for (p, &(rho, want)) in line.points.iter().zip(&common::BAYES_LINE) {
        assert_eq!(p.rho, rho);
        assert!((p.alpha_c - want).abs() < 2e-3, "rho={rho}: {} vs {want}", p.alpha_c);
    }
}

#[test]
fn lines_are_stable_under_refined_settings() {
    let refined = SeSettings::default().refined();
    for method in [LineMethod::BayesHard, LineMethod::DonohoTanner] {
        let a = critical_alpha(0.3, method).unwrap();
        let b = critical_alpha_with(0.3, method, &refined).unwrap();
        assert!((a - b).abs() < 1e-3, "{method}: {a} vs {b}");
    }
}

#[test]
fn verdicts_on_either_side_of_the_line() {
    assert!(se_converges(0.6, 0.2, DenoiserPolicy::Bayes));
    assert!(!se_converges(0.3, 0.2, DenoiserPolicy::Bayes));
    assert!(se_converges(0.6, 0.2, DenoiserPolicy::L1Optimized));
    assert!(!se_converges(0.45, 0.2, DenoiserPolicy::L1Optimized));
    // outside the admissible domain nothing converges
    assert!(!se_converges(0.0, 0.2, DenoiserPolicy::Bayes));
    assert!(!se_converges(0.5, 1.0, DenoiserPolicy::Bayes));
}

#[test]
fn rejects_rho_outside_domain() {
    assert!(critical_alpha(0.01, LineMethod::BayesHard).is_err());
    assert!(critical_alpha(0.99, LineMethod::DonohoTanner).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bayes_line_below_l1_line(rho in 0.05f64..0.9) {
        let bayes = critical_alpha(rho, LineMethod::BayesHard).unwrap();
        let dt = critical_alpha(rho, LineMethod::DonohoTanner).unwrap();
        prop_assert!(rho < bayes && bayes < dt && dt < 1.0, "rho={} bayes={} dt={}", rho, bayes, dt);
    }
}

proptest! {
    #[test]
    fn bayes_psi_below_linear_estimator(sigma2 in 1e-6f64..1.0, alpha in 0.05f64..1.0, rho in 0.03f64..0.97) {
        let psi = se_psi(sigma2, &Denoiser::BayesGaussBernoulli { rho }, alpha, rho).unwrap();
        let s2 = sigma2 / alpha;
        prop_assert!(psi >= 0.0);
        prop_assert!(psi <= rho * s2 / (rho + s2) * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn psi_is_nondecreasing(sigma2 in 1e-6f64..1.0, factor in 1.0f64..3.0, alpha in 0.1f64..1.0, rho in 0.03f64..0.97, kappa in 0.1f64..3.0) {
        for den in [Denoiser::BayesGaussBernoulli { rho }, Denoiser::SoftThreshold { kappa }] {
            let a = se_psi(sigma2, &den, alpha, rho).unwrap();
            let b = se_psi(sigma2 * factor, &den, alpha, rho).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-9), "{:?}: {} then {}", den, a, b);
        }
    }
}
