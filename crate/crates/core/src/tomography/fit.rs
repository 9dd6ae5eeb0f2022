//! One-parameter fit of the loss-mixture Wigner function
//! `W(alpha; eta) = eta W_1(alpha) + (1 - eta) W_0(alpha)`.
//!
//! The model is affine in `eta`, so the weighted least-squares optimum is the
//! solution of a scalar normal equation.

use crate::error::{Error, Result};
use crate::fock::{fock_wigner, ComplexAmplitude};
use crate::tomography::WignerSample;

pub fn loss_mixture_wigner(alpha: ComplexAmplitude, eta: f64) -> f64 {
    eta * fock_wigner(1, alpha) + (1.0 - eta) * fock_wigner(0, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Best-fit efficiency, clamped to `[0, 1]`.
    pub eta: f64,
    /// Standard error from the curvature of the objective.
    pub sigma: f64,
    /// `w_i - W(alpha_i; eta)` in sample order.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub dof: usize,
    /// False when some sample had no error bar and unit weights were used.
    pub weighted: bool,
}

impl FitResult {
    pub fn reduced_chi_square(&self) -> f64 {
        self.chi_square / self.dof as f64
    }
}

pub fn fit_eta(samples: &[WignerSample]) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::IllConditionedFit(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut radii: Vec<f64> = samples.iter().map(|s| s.alpha.norm()).collect();
    radii.sort_by(f64::total_cmp);
    let distinct = 1 + radii.windows(2).filter(|w| w[1] - w[0] > 1e-9).count();
    if distinct < 2 {
        return Err(Error::IllConditionedFit(
            "all samples sit at one displacement amplitude".into(),
        ));
    }

    let weighted = samples.iter().all(|s| s.sigma > 0.0 && s.sigma.is_finite());
    let weight = |s: &WignerSample| if weighted { 1.0 / (s.sigma * s.sigma) } else { 1.0 };

    let mut curvature = 0.0;
    let mut projection = 0.0;
    for s in samples {
        let w0 = fock_wigner(0, s.alpha);
        let d = fock_wigner(1, s.alpha) - w0;
        curvature += weight(s) * d * d;
        projection += weight(s) * d * (s.w - w0);
    }
    if !(curvature > 1e-300) {
        return Err(Error::IllConditionedFit(
            "model is insensitive to eta at the sampled amplitudes".into(),
        ));
    }
    let eta = (projection / curvature).clamp(0.0, 1.0);
    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| s.w - loss_mixture_wigner(s.alpha, eta))
        .collect();
    let chi_square: f64 = samples
        .iter()
        .zip(&residuals)
        .map(|(s, r)| weight(s) * r * r)
        .sum();
    let dof = samples.len() - 1;
    let sigma = if weighted {
        (1.0 / curvature).sqrt()
    } else {
        (chi_square / dof as f64 / curvature).sqrt()
    };
    Ok(FitResult {
        eta,
        sigma,
        residuals,
        chi_square,
        dof,
        weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn noiseless(eta: f64, sigma: f64) -> Vec<WignerSample> {
        (0..12)
            .map(|k| {
                let alpha = ComplexAmplitude::from_polar(0.07 * k as f64, 0.3 * k as f64);
                WignerSample {
                    alpha,
                    w: loss_mixture_wigner(alpha, eta),
                    sigma,
                    shots: 1,
                }
            })
            .collect()
    }

    #[test]
    fn mixture_model_values() {
        assert_abs_diff_eq!(loss_mixture_wigner(ComplexAmplitude::ZERO, 0.58), (1.0 - 2.0 * 0.58) / PI, epsilon = 1e-15);
        let w = loss_mixture_wigner(ComplexAmplitude::new(0.5, 0.0), 0.57);
        assert_abs_diff_eq!(w, 0.43 * (-0.5f64).exp() / PI, epsilon = 1e-15);
    }

    #[test]
    fn noiseless_recovery() {
        let fit = fit_eta(&noiseless(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(fit.eta, 1.0, epsilon = 1e-14);
        assert!(!fit.weighted);
        assert!(fit.sigma < 1e-12);
        let fit = fit_eta(&noiseless(0.57, 0.003)).unwrap();
        assert_abs_diff_eq!(fit.eta, 0.57, epsilon = 1e-13);
        assert!(fit.weighted);
        assert_eq!(fit.residuals.len(), 12);
        assert!(fit.chi_square < 1e-20);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let s = noiseless(0.5, 0.01);
        assert!(matches!(fit_eta(&s[..2]), Err(Error::IllConditionedFit(_))));
        let ring: Vec<_> = (0..5)
            .map(|k| WignerSample {
                alpha: ComplexAmplitude::from_polar(0.3, k as f64),
                w: 0.0,
                sigma: 0.01,
                shots: 1,
            })
            .collect();
        assert!(matches!(fit_eta(&ring), Err(Error::IllConditionedFit(_))));
    }

    #[test]
    fn estimate_is_clamped() {
        let mut s = noiseless(1.0, 0.01);
        for x in &mut s {
            x.w *= 1.5;
        }
        assert_eq!(fit_eta(&s).unwrap().eta, 1.0);
    }
}
