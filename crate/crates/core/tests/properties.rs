use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use wigner_pnr::detector::{detect, detection_distribution, sample_histogram, DetectorModel};
use wigner_pnr::fock::{fock_wigner, photon_number_distribution, wigner_exact};
use wigner_pnr::optics::{apply_displacement, apply_loss, commute_loss_displacement_check, LossBudget};
use wigner_pnr::tomography::{
    calibrate_alpha, fit_eta, loss_mixture_wigner, prepare_scan, wigner_from_histogram, ScanOptions, ScanPlan,
    ScanRoute, WignerSample,
};
use wigner_pnr::detector::CountHistogram;
use wigner_pnr::{ComplexAmplitude, FockDensityMatrix, PhotonDistribution};

/// Random density matrix `A A^dag / tr` supported on the lowest `support`
/// levels of a `dim`-level space.
fn random_state(entries: &[(f64, f64)], support: usize, dim: usize) -> FockDensityMatrix {
    let a = DMatrix::from_fn(support, support, |i, j| {
        let (re, im) = entries[(i * support + j) % entries.len()];
        Complex64::new(re, im)
    });
    let m = &a * a.adjoint();
    let tr: f64 = (0..support).map(|k| m[(k, k)].re).sum();
    let mut full = DMatrix::zeros(dim, dim);
    full.view_mut((0, 0), (support, support)).copy_from(&(m / Complex64::new(tr, 0.0)));
    FockDensityMatrix::from_matrix(full).unwrap()
}

fn state_strategy(support: usize, dim: usize) -> impl Strategy<Value = FockDensityMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), support * support)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(move |v| random_state(&v, support, dim))
}

fn amplitude(max: f64) -> impl Strategy<Value = ComplexAmplitude> {
    (0.0..max, 0.0..TAU).prop_map(|(r, p)| ComplexAmplitude::from_polar(r, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_a_semigroup(rho in state_strategy(5, 10), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let seq = apply_loss(&apply_loss(&rho, e1).unwrap(), e2).unwrap();
        let once = apply_loss(&rho, e1 * e2).unwrap();
        prop_assert!(seq.max_abs_diff(&once) < 1e-12);
    }

    #[test]
    fn loss_keeps_states_valid(rho in state_strategy(6, 8), eta in 0.0f64..=1.0) {
        let out = apply_loss(&rho, eta).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(out.validate().is_ok());
        prop_assert!((out.mean_photon_number() - eta * rho.mean_photon_number()).abs() < 1e-12);
    }

    #[test]
    fn coherent_states_stay_coherent(alpha in amplitude(1.5), eta in 0.0f64..=1.0) {
        let rho = FockDensityMatrix::coherent(alpha, 30).unwrap();
        let out = apply_loss(&rho, eta).unwrap();
        let expected = FockDensityMatrix::coherent(alpha.scale(eta.sqrt()), 30).unwrap();
        prop_assert!(out.max_abs_diff(&expected) < 1e-8);
    }

    #[test]
    fn loss_commutes_with_scaled_displacement(
        rho in state_strategy(3, 21),
        beta in amplitude(0.8),
        eta in 0.0f64..=1.0,
    ) {
        prop_assert!(commute_loss_displacement_check(&rho, beta, eta).unwrap() <= 1e-10);
    }

    #[test]
    fn displacement_keeps_states_valid(rho in state_strategy(4, 40), alpha in amplitude(1.0)) {
        let out = apply_displacement(&rho, alpha).unwrap();
        prop_assert!(out.leaked < 1e-8);
        prop_assert!(out.state.validate().is_ok());
        let back = apply_displacement(&out.state, -alpha).unwrap().state;
        prop_assert!(back.max_abs_diff(&rho) < 1e-10, "{} {:?}", back.max_abs_diff(&rho), alpha);
    }

    #[test]
    fn wigner_matches_laguerre(n in 0usize..5, alpha in amplitude(1.2)) {
        let rho = FockDensityMatrix::fock(n, 21).unwrap();
        prop_assert!((wigner_exact(&rho, alpha).unwrap() - fock_wigner(n, alpha)).abs() < 1e-10);
    }

    #[test]
    fn wigner_is_bounded(rho in state_strategy(4, 21), alpha in amplitude(2.0)) {
        prop_assert!(wigner_exact(&rho, alpha).unwrap().abs() <= 1.0 / PI + 1e-12);
    }

    #[test]
    fn saturating_detection_preserves_probability(rho in state_strategy(8, 12), dark in 0.0f64..0.2, mis in 0.0f64..0.2) {
        let det = DetectorModel { dark_rate: dark, miscount_probability: mis, ..DetectorModel::default() };
        let out = detection_distribution(&rho, &det).unwrap();
        prop_assert!((out.distribution.total() - 1.0).abs() < 1e-12);
        prop_assert_eq!(out.distribution.len(), det.n_max_resolved + 1);
    }

    #[test]
    fn sampling_is_reproducible(p in 0.0f64..=1.0, shots in 1u64..100_000, seed in any::<u64>()) {
        let dist = PhotonDistribution::new(vec![1.0 - p, p]).unwrap();
        let a = sample_histogram(&dist, shots, seed);
        prop_assert_eq!(a.shots(), shots);
        prop_assert_eq!(&a, &sample_histogram(&dist, shots, seed));
        prop_assert!((a.frequencies().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimator_consistency(rho in state_strategy(3, 21), alpha in amplitude(0.8), eta in 0.3f64..=1.0) {
        let lossy = apply_loss(&rho, eta).unwrap();
        let displaced = apply_displacement(&lossy, -alpha).unwrap().state;
        let det = detect(&photon_number_distribution(&displaced), &DetectorModel::default()).unwrap();
        let counts: Vec<u64> = det.distribution.probabilities().iter().map(|p| (p * 1e15).round() as u64).collect();
        let w = wigner_from_histogram(&CountHistogram::from_counts(counts));
        let exact = wigner_exact(&lossy, alpha).unwrap();
        prop_assert!((w - exact).abs() <= 2.0 * det.tail_mass / PI + 1e-9, "{} {} {} {:?}", w, exact, det.tail_mass, alpha);
    }

    #[test]
    fn poisson_ratio_recovers_amplitude(alpha in 0.1f64..1.2) {
        let x = alpha * alpha;
        let scale = 1e14;
        let counts: Vec<u64> = (0..6)
            .map(|n| (scale * (-x).exp() * x.powi(n) / (1..=n).product::<i32>() as f64).round() as u64)
            .collect();
        let est = calibrate_alpha(&CountHistogram::from_counts(counts)).unwrap();
        prop_assert!((est.value - alpha).abs() < 1e-6);
    }

    #[test]
    fn noiseless_fit_recovers_eta(eta in 0.0f64..=1.0) {
        let samples: Vec<WignerSample> = (0..15)
            .map(|k| {
                let alpha = ComplexAmplitude::from_polar(0.06 * k as f64, 0.4 * k as f64);
                WignerSample { alpha, w: loss_mixture_wigner(alpha, eta), sigma: 0.001, shots: 1 }
            })
            .collect();
        prop_assert!((fit_eta(&samples).unwrap().eta - eta).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scan_routes_agree(rho in state_strategy(3, 21), eta in 0.2f64..=1.0) {
        let plan = ScanPlan::new(vec![0.0, 0.3, 0.796], vec![0.0, 2.0, 4.0], 10, 1, 1).unwrap();
        let budget = LossBudget::single(eta).unwrap();
        let det = DetectorModel::default();
        let exact = |route| {
            prepare_scan(&rho, &plan, &det, &budget, ScanOptions { route, visibility: None })
                .unwrap()
                .exact_values()
        };
        let a = exact(ScanRoute::LossThenDisplace);
        let b = exact(ScanRoute::DisplaceThenLoss);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10, "{} {}", x, y);
        }
    }

    #[test]
    fn diagonal_states_are_phase_symmetric(pops in prop::collection::vec(0.0f64..1.0, 4), eta in 0.2f64..=1.0) {
        let total: f64 = pops.iter().sum();
        prop_assume!(total > 1e-3);
        let pops: Vec<f64> = pops.iter().map(|p| p / total).collect();
        let rho = FockDensityMatrix::from_diagonal(&pops, 21).unwrap();
        let phases: Vec<f64> = (0..10).map(|k| TAU * k as f64 / 10.0).collect();
        let plan = ScanPlan::new(vec![0.25, 0.6], phases, 10, 1, 1).unwrap();
        let prepared = prepare_scan(&rho, &plan, &DetectorModel::default(), &LossBudget::single(eta).unwrap(), ScanOptions::default()).unwrap();
        for ring in prepared.points.chunks(10) {
            for p in ring {
                prop_assert!((p.exact_w - ring[0].exact_w).abs() <= 1e-12);
            }
        }
    }
}
