//! Displacement-amplitude calibration from coherent-state statistics.
//!
//! For a Poisson distribution `P(2)/P(1) = |alpha|^2 / 2`, so
//! `|alpha| = sqrt(2 P(2) / P(1))` without reference to the overall rate.

use crate::detector::CountHistogram;
use crate::error::{Error, Result};

/// Fewest two-photon events accepted for a calibration point.
pub const MIN_TWO_PHOTON_EVENTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeEstimate {
    pub value: f64,
    pub sigma: f64,
}

/// `|alpha| = sqrt(2 n_2 / n_1)` with multinomial error
/// `(|alpha| / 2) sqrt(1/n_1 + 1/n_2)`.
pub fn calibrate_alpha(hist: &CountHistogram) -> Result<AmplitudeEstimate> {
    let n1 = hist.count(1);
    let n2 = hist.count(2);
    if n2 < MIN_TWO_PHOTON_EVENTS || n1 == 0 {
        return Err(Error::InsufficientTwoPhotonEvents {
            count: n2,
            required: MIN_TWO_PHOTON_EVENTS,
        });
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    let value = (2.0 * n2 / n1).sqrt();
    Ok(AmplitudeEstimate {
        value,
        sigma: 0.5 * value * (1.0 / n1 + 1.0 / n2).sqrt(),
    })
}

/// Shots needed for the calibration error at `alpha` to reach `target_sigma`.
pub fn calibration_shots(alpha: f64, target_sigma: f64) -> Result<u64> {
    if !(alpha > 0.0) || !(target_sigma > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "calibration needs positive amplitude and target, got {alpha} and {target_sigma}"
        )));
    }
    let x = alpha * alpha;
    let p1 = (-x).exp() * x;
    let p2 = (-x).exp() * x * x / 2.0;
    let shots = (0.5 * alpha / target_sigma).powi(2) * (1.0 / p1 + 1.0 / p2);
    Ok(shots.ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_poisson_ratio_recovers_amplitude() {
        for &alpha in &[0.15f64, 0.5, 0.796] {
            let x = alpha * alpha;
            let scale = 1e12;
            let p1 = (scale * (-x).exp() * x).round() as u64;
            let p2 = (scale * (-x).exp() * x * x / 2.0).round() as u64;
            let h = CountHistogram::from_counts(vec![0, p1, p2]);
            assert_abs_diff_eq!(calibrate_alpha(&h).unwrap().value, alpha, epsilon = 1e-8);
        }
    }

    #[test]
    fn too_few_two_photon_events() {
        let h = CountHistogram::from_counts(vec![10_000, 100, 9]);
        assert!(matches!(
            calibrate_alpha(&h),
            Err(Error::InsufficientTwoPhotonEvents { count: 9, .. })
        ));
        assert!(calibrate_alpha(&CountHistogram::from_counts(vec![100])).is_err());
    }

    #[test]
    fn shot_budget() {
        let n = calibration_shots(0.25, 3e-3).unwrap();
        let x = 0.0625f64;
        let n1 = n as f64 * (-x).exp() * x;
        let n2 = n as f64 * (-x).exp() * x * x / 2.0;
        assert!(0.125 * (1.0 / n1 + 1.0 / n2).sqrt() <= 3e-3 * (1.0 + 1e-9));
        assert!(calibration_shots(0.0, 1e-3).is_err());
    }
}
