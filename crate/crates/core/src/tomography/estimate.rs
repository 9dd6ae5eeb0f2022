use std::f64::consts::PI;

use crate::detector::CountHistogram;
use crate::error::{Error, Result};
use crate::fock::{parity_sign, ComplexAmplitude};
use crate::tomography::WignerSample;

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

fn mean_parity(hist: &CountHistogram) -> f64 {
    let shots = hist.shots() as f64;
    hist.counts()
        .iter()
        .enumerate()
        .map(|(n, &c)| parity_sign(n) * c as f64)
        .sum::<f64>()
        / shots
}

/// `(1/pi) sum_n (-1)^n f_n` over the empirical frequencies.
///
/// The saturated top bin is counted with its own parity. Returns NaN for an
/// empty histogram.
pub fn wigner_from_histogram(hist: &CountHistogram) -> f64 {
    mean_parity(hist) / PI
}

/// Standard error of the parity mean, `sqrt((1 - mu^2) / shots) / pi`.
pub fn estimator_sigma(hist: &CountHistogram) -> Result<f64> {
    let shots = hist.shots();
    if shots < 2 {
        return Err(Error::DegenerateInput(format!(
            "estimator sigma needs at least 2 shots, got {shots}"
        )));
    }
    let mu = mean_parity(hist);
    Ok(((1.0 - mu * mu).max(0.0) / shots as f64).sqrt() / PI)
}

/// Wigner sample for one grid point.
///
/// A single histogram gives the parity estimate with its multinomial error.
/// Several histograms are repeated datasets of the same point (the blocked
/// displacement at the origin): the value is their mean and the error is the
/// sample standard deviation across datasets.
pub fn estimate_point(alpha: ComplexAmplitude, hists: &[CountHistogram]) -> Result<WignerSample> {
    match hists {
        [] => Err(Error::DegenerateInput("grid point without data".into())),
        [single] => {
            if single.shots() == 0 {
                return Err(Error::DegenerateInput("histogram has no events".into()));
            }
            Ok(WignerSample {
                alpha,
                w: wigner_from_histogram(single),
                sigma: if single.shots() >= 2 {
                    estimator_sigma(single)?
                } else {
                    0.0
                },
                shots: single.shots(),
            })
        }
        many => {
            if many.iter().any(|h| h.shots() == 0) {
                return Err(Error::DegenerateInput("histogram has no events".into()));
            }
            let values: Vec<f64> = many.iter().map(wigner_from_histogram).collect();
            let (mean, std) = mean_and_std(&values);
            Ok(WignerSample {
                alpha,
                w: mean,
                sigma: std,
                shots: many.iter().map(CountHistogram::shots).sum(),
            })
        }
    }
}

/// Mean and sample (n - 1) standard deviation; zero spread for one value.
pub(crate) fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `g2(0)` of the pooled histograms. With several datasets the uncertainty is
/// the spread of the per-dataset values divided by `sqrt(R)`; with one it is
/// zero.
pub fn g2_from_histograms(hists: &[CountHistogram]) -> Result<Estimate> {
    let pooled = CountHistogram::pooled(hists);
    let value = pooled.probabilities()?.g2_zero()?;
    let per_set: Vec<f64> = hists
        .iter()
        .filter_map(|h| h.probabilities().ok()?.g2_zero().ok())
        .collect();
    let sigma = if per_set.len() >= 2 {
        mean_and_std(&per_set).1 / (per_set.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(Estimate { value, sigma })
}

/// `N_c / N_i` with binomial error `sqrt(p (1 - p) / N_i)`.
pub fn heralding_ratio(coincidences: u64, idler_singles: u64) -> Result<Estimate> {
    if idler_singles == 0 {
        return Err(Error::DegenerateInput("no idler singles".into()));
    }
    if coincidences > idler_singles {
        return Err(Error::DegenerateInput(format!(
            "{coincidences} coincidences exceed {idler_singles} idler singles"
        )));
    }
    let p = coincidences as f64 / idler_singles as f64;
    Ok(Estimate {
        value: p,
        sigma: (p * (1.0 - p) / idler_singles as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hist(c: &[u64]) -> CountHistogram {
        CountHistogram::from_counts(c.to_vec())
    }

    #[test]
    fn parity_estimates() {
        assert_abs_diff_eq!(wigner_from_histogram(&hist(&[1000])), 1.0 / PI);
        assert_abs_diff_eq!(wigner_from_histogram(&hist(&[0, 1000])), -1.0 / PI);
        let w = wigner_from_histogram(&hist(&[42, 58]));
        assert_abs_diff_eq!(w, -0.16 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(w, -0.0509, epsilon = 1e-4);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(estimator_sigma(&hist(&[0, 500])).unwrap(), 0.0);
        let s = estimator_sigma(&hist(&[5000, 5000])).unwrap();
        assert_abs_diff_eq!(s, 0.01 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.00318, epsilon = 1e-5);
        let s = estimator_sigma(&hist(&[42_000, 58_000])).unwrap();
        assert_abs_diff_eq!(s, ((1.0 - 0.0256) / 1e5f64).sqrt() / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.000994, epsilon = 1e-6);
        assert!(estimator_sigma(&hist(&[1])).is_err());
    }

    #[test]
    fn repeated_datasets() {
        let sets = [hist(&[40, 60]), hist(&[44, 56])];
        let s = estimate_point(ComplexAmplitude::ZERO, &sets).unwrap();
        assert_abs_diff_eq!(s.w, -0.16 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sigma, (0.08f64 * 0.08 / 2.0).sqrt() / PI, epsilon = 1e-15);
        assert_eq!(s.shots, 200);
        assert!(estimate_point(ComplexAmplitude::ZERO, &[]).is_err());
        assert!(estimate_point(ComplexAmplitude::ZERO, &[hist(&[0, 0])]).is_err());
    }

    #[test]
    fn heralding_examples() {
        let r = heralding_ratio(903, 1556).unwrap();
        assert_abs_diff_eq!(r.value, 0.580, epsilon = 1e-3);
        assert_abs_diff_eq!(r.sigma, 0.0125, epsilon = 1e-3);
        let r = heralding_ratio(1556, 1556).unwrap();
        assert_eq!((r.value, r.sigma), (1.0, 0.0));
        assert_eq!(heralding_ratio(0, 1556).unwrap().value, 0.0);
        assert!(heralding_ratio(0, 0).is_err());
        assert!(heralding_ratio(5, 4).is_err());
    }

    #[test]
    fn g2_from_counts() {
        let sets = [hist(&[420, 580]), hist(&[410, 590])];
        let g = g2_from_histograms(&sets).unwrap();
        assert_eq!(g.value, 0.0);
        let poissonish = [hist(&[0, 2, 1])];
        // <n(n-1)> = 2/3, <n> = 4/3
        assert_abs_diff_eq!(g2_from_histograms(&poissonish).unwrap().value, (2.0 / 3.0) / (16.0 / 9.0));
    }
}
