//! Monte Carlo behaviour of the sampling, estimators and fit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wigner_pnr::detector::{coincidence_probabilities, derive_seed, sample_histogram, DetectorModel};
use wigner_pnr::optics::LossBudget;
use wigner_pnr::source::{heralded_signal_state, HeraldConfig, HeraldMode, SqueezingParameter};
use wigner_pnr::tomography::{
    fit_eta, loss_mixture_wigner, phase_average, prepare_scan, ScanOptions, ScanPlan, WignerSample,
};
use wigner_pnr::{ComplexAmplitude, FockDensityMatrix, PhotonDistribution};

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[test]
fn bin_frequency_within_three_sigma() {
    let dist = PhotonDistribution::new(vec![0.42, 0.58]).unwrap();
    let h = sample_histogram(&dist, 100_000, 2019);
    assert!((h.frequencies()[1] - 0.58).abs() <= 0.005);
}

#[test]
fn empirical_frequencies_converge_at_multinomial_rate() {
    let probs = vec![0.3, 0.45, 0.15, 0.07, 0.02, 0.01];
    let dist = PhotonDistribution::new(probs.clone()).unwrap();
    let shots = 1_000_000u64;
    let seeds = 200;
    let good = (0..seeds)
        .filter(|&s| {
            let f = sample_histogram(&dist, shots, derive_seed(7, s)).frequencies();
            probs
                .iter()
                .zip(&f)
                .all(|(p, x)| (p - x).abs() < 5.0 * (p * (1.0 - p) / shots as f64).sqrt())
        })
        .count();
    assert!(good as f64 >= 0.99 * seeds as f64, "{good}/{seeds}");
}

#[test]
fn fit_recovery_over_seeds() {
    let one = FockDensityMatrix::fock(1, 21).unwrap();
    let plan = ScanPlan::default();
    let budget = LossBudget::single(0.57).unwrap();
    let prepared = prepare_scan(&one, &plan, &DetectorModel::default(), &budget, ScanOptions::default()).unwrap();
    let etas: Vec<f64> = (0..100)
        .map(|s| {
            let grid = prepared.sample_with_seed(derive_seed(42, s)).unwrap();
            fit_eta(&grid.samples()).unwrap().eta
        })
        .collect();
    let (mean, std) = mean_std(&etas);
    assert!((mean - 0.57).abs() <= 0.005, "mean {mean}");
    assert!(std <= 0.02, "std {std}");
}

#[test]
fn fit_with_gaussian_noise() {
    let normal = Normal::new(0.0, 0.005).unwrap();
    let etas: Vec<f64> = (0..100u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<WignerSample> = ScanPlan::default()
                .points()
                .into_iter()
                .map(|(r, phi)| {
                    let alpha = ComplexAmplitude::from_polar(r, phi);
                    WignerSample {
                        alpha,
                        w: loss_mixture_wigner(alpha, 0.57) + normal.sample(&mut rng),
                        sigma: 0.005,
                        shots: 1,
                    }
                })
                .collect();
            fit_eta(&samples).unwrap().eta
        })
        .collect();
    let (mean, std) = mean_std(&etas);
    assert!((mean - 0.57).abs() <= 0.01, "mean {mean}");
    assert!(std <= 0.01, "std {std}");
    assert!(etas.iter().all(|e| (e - 0.57).abs() <= 0.03));
}

#[test]
fn heralded_pipeline_fit_is_consistent_with_channel_efficiency() {
    let herald = heralded_signal_state(SqueezingParameter::default(), &HeraldConfig::default(), 21).unwrap();
    let budget = LossBudget::single(0.58).unwrap();
    let grid = prepare_scan(&herald.state, &ScanPlan::default(), &DetectorModel::default(), &budget, ScanOptions::default())
        .unwrap()
        .sample()
        .unwrap();
    let fit = fit_eta(&grid.samples()).unwrap();
    assert!((fit.eta - 0.58).abs() <= 2.0 * fit.sigma, "{} +/- {}", fit.eta, fit.sigma);

    // negative dip at the origin, positive ring, decay towards the edge
    let profile = phase_average(&grid);
    let means: Vec<f64> = profile.points.iter().map(|p| p.mean).collect();
    assert!(means[0] < 0.0);
    let (peak_at, peak) = means.iter().enumerate().fold((0, f64::MIN), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
    assert!(peak > 0.0 && peak_at > 0 && peak_at < means.len() - 1);
    assert!(*means.last().unwrap() < peak);
}

#[test]
fn threshold_heralding_ratio_ignores_idler_loss() {
    let zeta = SqueezingParameter::new(0.01).unwrap();
    let budget = LossBudget::single(0.58).unwrap();
    for &eta_i in &[0.01, 0.1, 0.5, 1.0] {
        let cfg = HeraldConfig {
            idler_efficiency: eta_i,
            herald_mode: HeraldMode::Threshold,
            max_pairs: 6,
        };
        let [both, herald_only, _] = coincidence_probabilities(zeta, &cfg, &budget).unwrap();
        let ratio = both / (both + herald_only);
        assert!((ratio - 0.58).abs() < 5e-4, "eta_i={eta_i}: {ratio}");
    }
}
