//! Raster scan of phase space.
//!
//! A scan is prepared once (exact detected distributions per grid point) and
//! then sampled for any seed. Grid amplitudes are the calibrated amplitudes
//! seen at the detector, i.e. after the loss chain.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::detector::{derive_seed, detect, sample_histogram, CountHistogram, Detection, DetectorModel};
use crate::error::{Error, Result};
use crate::fock::{photon_number_distribution, ComplexAmplitude, FockDensityMatrix};
use crate::optics::{apply_displacement, apply_loss, mode_matched_amplitude, LossBudget};
use crate::tomography::estimate::{estimate_point, mean_and_std};

pub const DEFAULT_AMPLITUDE_STEPS: usize = 20;
pub const DEFAULT_ALPHA_MAX: f64 = 0.796;
pub const DEFAULT_PHASE_STEPS: usize = 10;
pub const DEFAULT_SHOTS: u64 = 100_000;
pub const DEFAULT_ORIGIN_REPEATS: usize = 10;
pub const DEFAULT_SEED: u64 = 0x5EED_2019;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    shots_per_point: u64,
    seed: u64,
    origin_repeats: usize,
}

impl ScanPlan {
    pub fn new(
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
        shots_per_point: u64,
        seed: u64,
        origin_repeats: usize,
    ) -> Result<Self> {
        if amplitudes.is_empty() || phases.is_empty() {
            return Err(Error::DegenerateInput("scan needs amplitudes and phases".into()));
        }
        if let Some(&a) = amplitudes.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(Error::InvalidParameter {
                name: "amplitude",
                value: a,
                reason: "must be finite and nonnegative",
            });
        }
        if amplitudes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateInput("amplitudes must be strictly ascending".into()));
        }
        if let Some(&p) = phases.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(Error::InvalidParameter {
                name: "phase",
                value: p,
                reason: "must lie in [0, 2 pi)",
            });
        }
        if phases.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DegenerateInput("phases must be strictly increasing".into()));
        }
        if shots_per_point == 0 {
            return Err(Error::InvalidParameter {
                name: "shots_per_point",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if origin_repeats == 0 {
            return Err(Error::InvalidParameter {
                name: "origin_repeats",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            amplitudes,
            phases,
            shots_per_point,
            seed,
            origin_repeats,
        })
    }

    /// `amplitude_steps` amplitudes from 0 to `alpha_max` inclusive and
    /// `phase_steps` phases `2 pi k / phase_steps`.
    pub fn uniform(
        amplitude_steps: usize,
        alpha_max: f64,
        phase_steps: usize,
        shots_per_point: u64,
        seed: u64,
    ) -> Result<Self> {
        if amplitude_steps < 2 || phase_steps < 1 || !(alpha_max > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "uniform scan needs >= 2 amplitude steps, >= 1 phase step and alpha_max > 0 \
                 (got {amplitude_steps}, {phase_steps}, {alpha_max})"
            )));
        }
        let last = (amplitude_steps - 1) as f64;
        let amplitudes = (0..amplitude_steps)
            .map(|k| alpha_max * k as f64 / last)
            .collect();
        let phases = (0..phase_steps)
            .map(|k| TAU * k as f64 / phase_steps as f64)
            .collect();
        Self::new(amplitudes, phases, shots_per_point, seed, DEFAULT_ORIGIN_REPEATS)
    }

    pub fn with_origin_repeats(mut self, repeats: usize) -> Result<Self> {
        if repeats == 0 {
            return Err(Error::InvalidParameter {
                name: "origin_repeats",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        self.origin_repeats = repeats;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn shots_per_point(&self) -> u64 {
        self.shots_per_point
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn origin_repeats(&self) -> usize {
        self.origin_repeats
    }

    /// Grid coordinates in scan order. A zero amplitude (displacement
    /// blocked) contributes one point at phase 0.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &a in &self.amplitudes {
            if a == 0.0 {
                out.push((0.0, 0.0));
            } else {
                out.extend(self.phases.iter().map(|&p| (a, p)));
            }
        }
        out
    }
}

impl Default for ScanPlan {
    fn default() -> Self {
        Self::uniform(
            DEFAULT_AMPLITUDE_STEPS,
            DEFAULT_ALPHA_MAX,
            DEFAULT_PHASE_STEPS,
            DEFAULT_SHOTS,
            DEFAULT_SEED,
        )
        .expect("default plan is valid")
    }
}

/// Order in which the loss chain and the displacement are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanRoute {
    /// Lose once, then displace by the grid amplitude.
    #[default]
    LossThenDisplace,
    /// Displace by `alpha / sqrt(eta)` before the loss chain.
    DisplaceThenLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScanOptions {
    pub route: ScanRoute,
    /// Interference visibility; when set the actual displacement is the grid
    /// amplitude scaled by it.
    pub visibility: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSample {
    pub alpha: ComplexAmplitude,
    pub w: f64,
    pub sigma: f64,
    pub shots: u64,
}

impl WignerSample {
    /// Soft range check `|w| <= 1/pi + sigma`.
    pub fn in_range(&self) -> bool {
        self.w.abs() <= 1.0 / PI + self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPoint {
    pub index: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub detection: Detection,
    /// Infinite-shot parity estimate from the detected distribution.
    pub exact_w: f64,
    /// Weight pushed past the state truncation by the displacement.
    pub leaked: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedScan {
    pub points: Vec<PreparedPoint>,
    pub shots_per_point: u64,
    pub seed: u64,
    pub origin_repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub seed: u64,
    /// One histogram, or `origin_repeats` datasets at zero displacement.
    pub histograms: Vec<CountHistogram>,
    pub sample: WignerSample,
}

impl GridPoint {
    pub fn from_histograms(
        index: usize,
        amplitude: f64,
        phase: f64,
        seed: u64,
        histograms: Vec<CountHistogram>,
    ) -> Result<Self> {
        let alpha = ComplexAmplitude::from_polar(amplitude, phase);
        let sample = estimate_point(alpha, &histograms)?;
        Ok(Self {
            index,
            amplitude,
            phase,
            seed,
            histograms,
            sample,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub points: Vec<GridPoint>,
}

impl WignerGrid {
    pub fn samples(&self) -> Vec<WignerSample> {
        self.points.iter().map(|p| p.sample).collect()
    }

    pub fn origin(&self) -> Option<&GridPoint> {
        self.points.iter().find(|p| p.amplitude == 0.0)
    }
}

/// State at the detector for grid amplitude `alpha`.
///
/// Parity after `D^dagger(alpha)` gives `W(alpha)`, so the applied
/// displacement is `-alpha`.
fn displaced_state(
    state: &FockDensityMatrix,
    lossy: Option<&FockDensityMatrix>,
    alpha: ComplexAmplitude,
    eta: f64,
    route: ScanRoute,
) -> Result<(FockDensityMatrix, f64)> {
    match route {
        ScanRoute::LossThenDisplace => {
            let lossy = lossy.expect("lossy state prepared for this route");
            let out = apply_displacement(lossy, -alpha)?;
            Ok((out.state, out.leaked))
        }
        ScanRoute::DisplaceThenLoss => {
            if eta <= 0.0 {
                return Err(Error::DegenerateInput(
                    "displace-then-lose route needs a nonzero efficiency".into(),
                ));
            }
            // the pre-loss amplitude is larger, so displace in a bigger space
            // and crop once the loss has pulled the weight back down
            let beta = -alpha.scale(1.0 / eta.sqrt());
            let dim = state.dim();
            let work = dim + (8.0 * beta.norm_sqr()).ceil() as usize + 10;
            let out = apply_displacement(&state.resized(work), beta)?;
            let (lossy, cropped) = apply_loss(&out.state, eta)?.resized(dim).renormalized();
            Ok((lossy, out.leaked + cropped))
        }
    }
}

/// Exact detected distributions for every grid point.
pub fn prepare_scan(
    state: &FockDensityMatrix,
    plan: &ScanPlan,
    det: &DetectorModel,
    budget: &LossBudget,
    options: ScanOptions,
) -> Result<PreparedScan> {
    det.validate()?;
    budget.validate()?;
    let eta = budget.product();
    let lossy = match options.route {
        ScanRoute::LossThenDisplace => Some(apply_loss(state, eta)?),
        ScanRoute::DisplaceThenLoss => None,
    };
    let coords = plan.points();
    let points = coords
        .par_iter()
        .enumerate()
        .map(|(index, &(amplitude, phase))| {
            let mut alpha = ComplexAmplitude::from_polar(amplitude, phase);
            if let Some(v) = options.visibility {
                alpha = mode_matched_amplitude(alpha, v)?;
            }
            let (displaced, leaked) = displaced_state(state, lossy.as_ref(), alpha, eta, options.route)?;
            let detection = detect(&photon_number_distribution(&displaced), det)?;
            let exact_w = detection.distribution.parity() / PI;
            Ok(PreparedPoint {
                index,
                amplitude,
                phase,
                detection,
                exact_w,
                leaked,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedScan {
        points,
        shots_per_point: plan.shots_per_point,
        seed: plan.seed,
        origin_repeats: plan.origin_repeats,
    })
}

impl PreparedScan {
    pub fn sample(&self) -> Result<WignerGrid> {
        self.sample_with_seed(self.seed)
    }

    /// Samples every point with seeds derived from `master` and the point
    /// index; origin repeats derive again from the point seed.
    pub fn sample_with_seed(&self, master: u64) -> Result<WignerGrid> {
        let points = self
            .points
            .par_iter()
            .map(|pt| {
                let seed = derive_seed(master, pt.index as u64);
                let dist = &pt.detection.distribution;
                let histograms = if pt.amplitude == 0.0 {
                    (0..self.origin_repeats)
                        .map(|r| sample_histogram(dist, self.shots_per_point, derive_seed(seed, r as u64)))
                        .collect()
                } else {
                    vec![sample_histogram(dist, self.shots_per_point, seed)]
                };
                GridPoint::from_histograms(pt.index, pt.amplitude, pt.phase, seed, histograms)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WignerGrid { points })
    }

    pub fn exact_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.exact_w).collect()
    }

    pub fn max_tail_mass(&self) -> f64 {
        self.points.iter().map(|p| p.detection.tail_mass).fold(0.0, f64::max)
    }
}

/// Prepares and samples a scan along the default route.
pub fn run_scan(
    state: &FockDensityMatrix,
    plan: &ScanPlan,
    det: &DetectorModel,
    budget: &LossBudget,
) -> Result<WignerGrid> {
    prepare_scan(state, plan, det, budget, ScanOptions::default())?.sample()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPoint {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub points: Vec<RadialPoint>,
}

impl RadialProfile {
    /// Profile points as phase-zero samples, e.g. for a one-dimensional fit.
    pub fn as_samples(&self) -> Vec<WignerSample> {
        self.points
            .iter()
            .map(|p| WignerSample {
                alpha: ComplexAmplitude::new(p.amplitude, 0.0),
                w: p.mean,
                sigma: p.sigma,
                shots: 0,
            })
            .collect()
    }
}

/// Mean over phases per amplitude, with the phase-to-phase standard
/// deviation as the error bar. A ring with a single point (the origin)
/// keeps that point's own error, which for the origin comes from repeated
/// datasets.
pub fn phase_average(grid: &WignerGrid) -> RadialProfile {
    let mut rings: Vec<(f64, Vec<&WignerSample>)> = Vec::new();
    for p in &grid.points {
        match rings.iter_mut().find(|(a, _)| *a == p.amplitude) {
            Some((_, v)) => v.push(&p.sample),
            None => rings.push((p.amplitude, vec![&p.sample])),
        }
    }
    rings.sort_by(|a, b| a.0.total_cmp(&b.0));
    let points = rings
        .into_iter()
        .map(|(amplitude, samples)| {
            let values: Vec<f64> = samples.iter().map(|s| s.w).collect();
            let (mean, std) = mean_and_std(&values);
            RadialPoint {
                amplitude,
                mean,
                sigma: if samples.len() == 1 { samples[0].sigma } else { std },
                samples: samples.len(),
            }
        })
        .collect();
    RadialProfile { points }
}
