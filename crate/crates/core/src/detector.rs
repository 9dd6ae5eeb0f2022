//! Count-level photon-number-resolving detector and seeded sampling.
//!
//! Efficiency is applied upstream through the loss budget; the detector
//! model here only handles the finite resolving range, dark counts and an
//! optional pile-up style undercount.
//!
//! Sampling uses `ChaCha8Rng` seeded from a `u64`. Per-point seeds come from
//! [`derive_seed`], a SplitMix64 finalizer over the master seed and the point
//! index, so results do not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{check_unit_interval, Error, Result};
use crate::fock::{photon_number_distribution, FockDensityMatrix, PhotonDistribution};
use crate::optics::LossBudget;
use crate::source::{tmsv_joint_distribution, HeraldConfig, SqueezingParameter};

/// Highest photon number the detector distinguishes.
pub const DEFAULT_N_MAX_RESOLVED: usize = 5;

/// Continuous-wave flux limit in photons per microsecond.
pub const DEFAULT_FLUX_LIMIT: f64 = 5.0;

/// Tail mass above which a saturation warning is raised.
pub const SATURATION_WARNING_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClipPolicy {
    /// Over-range events register in the top bin.
    #[default]
    Saturate,
    /// Over-range events are dropped and the rest renormalized.
    Discard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub n_max_resolved: usize,
    pub clip_policy: ClipPolicy,
    /// Advisory only; not enforced by the count model.
    pub flux_limit: f64,
    /// Probability of one extra count per window.
    pub dark_rate: f64,
    /// Probability that a multi-photon event registers one photon short.
    pub miscount_probability: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            n_max_resolved: DEFAULT_N_MAX_RESOLVED,
            clip_policy: ClipPolicy::Saturate,
            flux_limit: DEFAULT_FLUX_LIMIT,
            dark_rate: 0.0,
            miscount_probability: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_max_resolved < 1 {
            return Err(Error::InvalidParameter {
                name: "n_max_resolved",
                value: self.n_max_resolved as f64,
                reason: "must be at least 1",
            });
        }
        if !(0.0..1.0).contains(&self.dark_rate) {
            return Err(Error::InvalidParameter {
                name: "dark_rate",
                value: self.dark_rate,
                reason: "must lie in [0, 1)",
            });
        }
        check_unit_interval("miscount_probability", self.miscount_probability)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorWarning {
    Saturation { tail_mass: f64 },
}

/// Detected-photon distribution over bins `0..=n_max_resolved`.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub distribution: PhotonDistribution,
    /// Probability of more than `n_max_resolved` photons.
    pub tail_mass: f64,
    /// True when the tail was dropped rather than saturated.
    pub discarded: bool,
}

impl Detection {
    pub fn warning(&self) -> Option<DetectorWarning> {
        (self.tail_mass > SATURATION_WARNING_THRESHOLD).then_some(DetectorWarning::Saturation {
            tail_mass: self.tail_mass,
        })
    }
}

pub fn detection_distribution(rho: &FockDensityMatrix, det: &DetectorModel) -> Result<Detection> {
    detect(&photon_number_distribution(rho), det)
}

/// Applies the detector model to an incident photon-number distribution.
pub fn detect(incident: &PhotonDistribution, det: &DetectorModel) -> Result<Detection> {
    det.validate()?;
    let mut probs = incident.probabilities().to_vec();

    if det.miscount_probability > 0.0 {
        let m = det.miscount_probability;
        let mut shifted = probs.clone();
        for n in 2..probs.len() {
            shifted[n] -= m * probs[n];
            shifted[n - 1] += m * probs[n];
        }
        probs = shifted;
    }

    if det.dark_rate > 0.0 {
        let d = det.dark_rate;
        let mut shifted = vec![0.0; probs.len() + 1];
        for (n, p) in probs.iter().enumerate() {
            shifted[n] += (1.0 - d) * p;
            shifted[n + 1] += d * p;
        }
        probs = shifted;
    }

    let top = det.n_max_resolved;
    let tail_mass: f64 = probs.iter().skip(top + 1).sum();
    probs.resize(top + 1, 0.0);
    let discarded = match det.clip_policy {
        ClipPolicy::Saturate => {
            probs[top] += tail_mass;
            false
        }
        ClipPolicy::Discard => {
            let kept: f64 = probs.iter().sum();
            if kept <= 0.0 {
                return Err(Error::DegenerateInput(
                    "every event lies above the detector range".into(),
                ));
            }
            probs.iter_mut().for_each(|p| *p /= kept);
            tail_mass > 0.0
        }
    };
    Ok(Detection {
        distribution: PhotonDistribution::new(probs)?,
        tail_mass,
        discarded,
    })
}

/// Event counts per detected photon number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountHistogram {
    counts: Vec<u64>,
}

impl CountHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, n: usize) -> u64 {
        self.counts.get(n).copied().unwrap_or(0)
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Empirical frequencies; all zero for an empty histogram.
    pub fn frequencies(&self) -> Vec<f64> {
        let shots = self.shots();
        if shots == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / shots as f64)
            .collect()
    }

    pub fn probabilities(&self) -> Result<PhotonDistribution> {
        if self.shots() == 0 {
            return Err(Error::DegenerateInput("histogram has no events".into()));
        }
        PhotonDistribution::new(self.frequencies())
    }

    /// Bin-wise sum of histograms.
    pub fn pooled<'a>(hists: impl IntoIterator<Item = &'a CountHistogram>) -> Self {
        let mut counts: Vec<u64> = Vec::new();
        for h in hists {
            if h.counts.len() > counts.len() {
                counts.resize(h.counts.len(), 0);
            }
            for (acc, c) in counts.iter_mut().zip(&h.counts) {
                *acc += c;
            }
        }
        Self { counts }
    }
}

/// SplitMix64 finalizer of `master + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multinomial draw of `shots` events from `dist`, reproducible for a seed.
pub fn sample_histogram(dist: &PhotonDistribution, shots: u64, seed: u64) -> CountHistogram {
    sample_with(&mut rng_from_seed(seed), dist.probabilities(), shots)
}

/// Multinomial draw by sequential conditional binomials.
pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, probs: &[f64], shots: u64) -> CountHistogram {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let cond = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond)
                .expect("conditional probability is in (0, 1)")
                .sample(rng)
        };
        counts[i] = k;
        remaining -= k;
        mass_left -= p;
    }
    CountHistogram { counts }
}

/// Simulated singles and coincidence counts over a number of windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coincidences {
    pub windows: u64,
    /// Windows with at least one signal count.
    pub signal_singles: u64,
    /// Windows with a herald.
    pub idler_singles: u64,
    /// Windows with both.
    pub coincidences: u64,
}

/// Per-window probabilities of (herald and signal, herald only, signal only).
pub fn coincidence_probabilities(
    zeta: SqueezingParameter,
    cfg: &HeraldConfig,
    budget: &LossBudget,
) -> Result<[f64; 3]> {
    cfg.validate()?;
    budget.validate()?;
    let eta = budget.product();
    let pairs = tmsv_joint_distribution(zeta, cfg.max_pairs)?;
    let mut out = [0.0; 3];
    for (n, p) in pairs.probs.iter().enumerate() {
        let herald = cfg.herald_probability_given(n);
        let click = 1.0 - (1.0 - eta).powi(n as i32);
        out[0] += p * herald * click;
        out[1] += p * herald * (1.0 - click);
        out[2] += p * (1.0 - herald) * click;
    }
    Ok(out)
}

/// Samples signal singles, idler singles and coincidences for `windows`
/// detection windows.
pub fn coincidence_counts(
    zeta: SqueezingParameter,
    cfg: &HeraldConfig,
    budget: &LossBudget,
    windows: u64,
    seed: u64,
) -> Result<Coincidences> {
    let [both, herald_only, signal_only] = coincidence_probabilities(zeta, cfg, budget)?;
    let neither = (1.0 - both - herald_only - signal_only).max(0.0);
    let h = sample_with(
        &mut rng_from_seed(seed),
        &[both, herald_only, signal_only, neither],
        windows,
    );
    Ok(Coincidences {
        windows,
        signal_singles: h.count(0) + h.count(2),
        idler_singles: h.count(0) + h.count(1),
        coincidences: h.count(0),
    })
}
