//! Loss and displacement channels.
//!
//! Loss is the binomial (amplitude-damping) channel written as a Kraus sum.
//! Displacement conjugates the state with [`displacement_matrix`]. The
//! unbalanced-beamsplitter displacement is computed by expanding the
//! two-mode beamsplitter in the number basis with a coherent local
//! oscillator on the second port and tracing that port out; it does not
//! assume any loss/displacement factorization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_unit_interval, Error, Result};
use crate::fock::{displacement_matrix, ComplexAmplitude, FockDensityMatrix};
use crate::special::{binomial, ln_factorials};

/// Chain of efficiencies between the source and the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBudget {
    /// Detector quantum efficiency, fiber transmission included.
    pub eta_tes: f64,
    /// Optical transmission from the source to the displacement.
    pub eta_ot: f64,
    /// Signal transmission of the displacement beamsplitter.
    pub eta_bs: f64,
    /// Fiber coupling.
    pub eta_ofc: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        Self {
            eta_tes: 0.71,
            eta_ot: 0.93,
            eta_bs: 0.97,
            eta_ofc: 0.90,
        }
    }
}

impl LossBudget {
    pub fn new(eta_tes: f64, eta_ot: f64, eta_bs: f64, eta_ofc: f64) -> Result<Self> {
        let budget = Self {
            eta_tes,
            eta_ot,
            eta_bs,
            eta_ofc,
        };
        budget.validate()?;
        Ok(budget)
    }

    /// A budget whose whole efficiency sits in one factor.
    pub fn single(eta: f64) -> Result<Self> {
        Self::new(eta, 1.0, 1.0, 1.0)
    }

    pub fn lossless() -> Self {
        Self {
            eta_tes: 1.0,
            eta_ot: 1.0,
            eta_bs: 1.0,
            eta_ofc: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("eta_tes", self.eta_tes)?;
        check_unit_interval("eta_ot", self.eta_ot)?;
        check_unit_interval("eta_bs", self.eta_bs)?;
        check_unit_interval("eta_ofc", self.eta_ofc)
    }

    /// Overall efficiency `eta_tes * eta_ot * eta_bs * eta_ofc`.
    pub fn product(&self) -> f64 {
        self.eta_tes * self.eta_ot * self.eta_bs * self.eta_ofc
    }
}

/// Binomial loss with transmission `eta`:
/// `rho'_{mn} = sum_k sqrt(C(m+k,k) C(n+k,k)) eta^{(m+n)/2} (1-eta)^k rho_{m+k,n+k}`.
pub fn apply_loss(rho: &FockDensityMatrix, eta: f64) -> Result<FockDensityMatrix> {
    check_unit_interval("eta", eta)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let dim = rho.dim();
    let src = rho.elements();
    let sqrt_eta = eta.sqrt();
    let mut out = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut loss_pow = 1.0;
            for k in 0..dim - m.max(n) {
                let c = (binomial(m + k, k) * binomial(n + k, k)).sqrt();
                acc += src[(m + k, n + k)] * (c * loss_pow);
                loss_pow *= 1.0 - eta;
            }
            out[(m, n)] = acc * sqrt_eta.powi((m + n) as i32);
        }
    }
    Ok(FockDensityMatrix::from_matrix_unchecked(out))
}

/// Output of a channel that can push weight past the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacedState {
    /// Renormalized state.
    pub state: FockDensityMatrix,
    /// Weight that fell outside the basis before renormalization.
    pub leaked: f64,
}

/// `D(alpha) rho D^dagger(alpha)`, renormalized, with the trace deficit.
pub fn apply_displacement(rho: &FockDensityMatrix, alpha: ComplexAmplitude) -> Result<DisplacedState> {
    if alpha == ComplexAmplitude::ZERO {
        return Ok(DisplacedState {
            state: rho.clone(),
            leaked: 0.0,
        });
    }
    let d = displacement_matrix(alpha, rho.dim())?;
    let m = d.elements() * rho.elements() * d.elements().adjoint();
    let (state, leaked) = FockDensityMatrix::from_matrix_unchecked(m).renormalized();
    Ok(DisplacedState { state, leaked })
}

/// Scales the local-oscillator amplitude by the interference visibility,
/// modeling imperfect mode matching as a reduced effective displacement.
pub fn mode_matched_amplitude(alpha: ComplexAmplitude, visibility: f64) -> Result<ComplexAmplitude> {
    check_unit_interval("visibility", visibility)?;
    Ok(alpha.scale(visibility))
}

/// Unbalanced beamsplitter used to displace the signal.
///
/// The signal reflects with amplitude `r` towards the detector and the local
/// oscillator `beta` transmits with amplitude `t`, so the net displacement is
/// `t * beta` and the signal sees a transmission `r^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamsplitterSpec {
    reflectivity_sq: f64,
    lo_amplitude: ComplexAmplitude,
}

/// Largest tolerated coherent-oscillator weight lost to the ancilla cutoff.
pub const ANCILLA_LEAK_TOL: f64 = 1e-8;
const MAX_ANCILLA_LEVELS: usize = 200_000;

impl BeamsplitterSpec {
    pub fn new(reflectivity_sq: f64, lo_amplitude: ComplexAmplitude) -> Result<Self> {
        if !(reflectivity_sq > 0.0 && reflectivity_sq < 1.0) {
            return Err(Error::InvalidParameter {
                name: "reflectivity_sq",
                value: reflectivity_sq,
                reason: "must lie in (0, 1)",
            });
        }
        if !lo_amplitude.norm().is_finite() {
            return Err(Error::InvalidParameter {
                name: "lo_amplitude",
                value: lo_amplitude.norm(),
                reason: "must be finite",
            });
        }
        Ok(Self {
            reflectivity_sq,
            lo_amplitude,
        })
    }

    /// Beamsplitter whose oscillator is sized to give net displacement `alpha`.
    pub fn for_displacement(reflectivity_sq: f64, alpha: ComplexAmplitude) -> Result<Self> {
        let t = (1.0 - reflectivity_sq).sqrt();
        Self::new(reflectivity_sq, alpha.scale(1.0 / t))
    }

    pub fn reflectivity_sq(&self) -> f64 {
        self.reflectivity_sq
    }

    pub fn transmissivity_sq(&self) -> f64 {
        1.0 - self.reflectivity_sq
    }

    pub fn lo_amplitude(&self) -> ComplexAmplitude {
        self.lo_amplitude
    }

    /// Ordering parameter `s = -t / r` of the measured quasiprobability.
    pub fn s_parameter(&self) -> f64 {
        -(self.transmissivity_sq() / self.reflectivity_sq).sqrt()
    }

    pub fn effective_displacement(&self) -> ComplexAmplitude {
        self.lo_amplitude.scale(self.transmissivity_sq().sqrt())
    }
}

/// Exact two-mode beamsplitter displacement with a coherent oscillator.
///
/// With `x`/`y` the detector/dump creation operators the beamsplitter maps
/// `a^dagger -> r x - t y` and `b^dagger -> t x + r y`. For each dump photon
/// number `q` this builds the Kraus operator
/// `K_q[p][n] = c_m <p, q| U |n, m>` with `m = p + q - n` and `c_m` the
/// oscillator amplitudes, then sums `K_q rho K_q^dagger`.
pub fn bs_displacement_exact(rho: &FockDensityMatrix, spec: &BeamsplitterSpec) -> Result<DisplacedState> {
    let dim = rho.dim();
    let beta = spec.lo_amplitude;
    let b = beta.norm();
    let ancilla = (b * b + 12.0 * b + 30.0).ceil() as usize;
    if ancilla > MAX_ANCILLA_LEVELS {
        return Err(Error::Truncation {
            what: "oscillator ancilla",
            leaked: 1.0,
            tolerance: ANCILLA_LEAK_TOL,
        });
    }
    let lnf = ln_factorials(ancilla + 2 * dim + 2);

    // ln|c_m| and the oscillator phase
    let ln_c: Vec<f64> = (0..=ancilla)
        .map(|m| {
            if b == 0.0 {
                if m == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                -0.5 * b * b + m as f64 * b.ln() - 0.5 * lnf[m]
            }
        })
        .collect();
    let kept: f64 = ln_c.iter().map(|l| (2.0 * l).exp()).sum();
    if 1.0 - kept > ANCILLA_LEAK_TOL {
        return Err(Error::Truncation {
            what: "oscillator ancilla",
            leaked: 1.0 - kept,
            tolerance: ANCILLA_LEAK_TOL,
        });
    }
    let phase = beta.arg();

    let r = spec.reflectivity_sq.sqrt();
    let t = spec.transmissivity_sq().sqrt();
    let (ln_r, ln_t) = (r.ln(), t.ln());
    let ln_binom = |n: usize, k: usize| lnf[n] - lnf[k] - lnf[n - k];

    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    let mut kraus = DMatrix::<Complex64>::zeros(dim, dim);
    for q in 0..=ancilla + dim {
        let mut any = false;
        for p in 0..dim {
            for n in 0..dim {
                kraus[(p, n)] = Complex64::new(0.0, 0.0);
                if p + q < n {
                    continue;
                }
                let m = p + q - n;
                if m > ancilla || ln_c[m] == f64::NEG_INFINITY {
                    continue;
                }
                let prefactor = 0.5 * (lnf[p] + lnf[q] - lnf[n] - lnf[m]) + ln_c[m];
                let mut amp = 0.0;
                let lo = p.saturating_sub(m);
                for i in lo..=n.min(p) {
                    let ln_mag = prefactor
                        + ln_binom(n, i)
                        + ln_binom(m, p - i)
                        + (i + m + i - p) as f64 * ln_r
                        + (n - i + p - i) as f64 * ln_t;
                    let sign = if (n - i) % 2 == 0 { 1.0 } else { -1.0 };
                    amp += sign * ln_mag.exp();
                }
                if amp != 0.0 {
                    any = true;
                    kraus[(p, n)] = Complex64::from_polar(amp, m as f64 * phase);
                }
            }
        }
        if any {
            out += &kraus * rho.elements() * kraus.adjoint();
        }
    }
    let (state, leaked) = FockDensityMatrix::from_matrix_unchecked(out).renormalized();
    Ok(DisplacedState { state, leaked })
}

/// Largest elementwise difference between displacing by `beta` then losing
/// `eta`, and losing `eta` then displacing by `sqrt(eta) beta`.
pub fn commute_loss_displacement_check(
    rho: &FockDensityMatrix,
    beta: ComplexAmplitude,
    eta: f64,
) -> Result<f64> {
    let displaced_first = apply_loss(&apply_displacement(rho, beta)?.state, eta)?;
    let lost_first = apply_displacement(&apply_loss(rho, eta)?, beta.scale(eta.sqrt()))?.state;
    Ok(displaced_first.max_abs_diff(&lost_first))
}
