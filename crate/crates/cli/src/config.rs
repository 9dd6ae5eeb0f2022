//! Run configuration (TOML). Every section and key is optional; missing
//! values take the defaults of the modeled experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wigner_pnr::detector::{ClipPolicy, DetectorModel};
use wigner_pnr::optics::LossBudget;
use wigner_pnr::source::{HeraldConfig, HeraldMode, SqueezingParameter};
use wigner_pnr::tomography::{ScanOptions, ScanPlan, ScanRoute};
use wigner_pnr::{detector, fock, source, tomography};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub source: SourceSection,
    pub fock: FockSection,
    pub optics: OpticsSection,
    pub detector: DetectorSection,
    pub scan: ScanSection,
    pub coincidence: CoincidenceSection,
    pub calibration: CalibrationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeraldModeName {
    #[default]
    PnrExactOne,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub zeta: f64,
    pub herald_mode: HeraldModeName,
    pub idler_efficiency: f64,
    pub max_pairs: usize,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            zeta: source::DEFAULT_ZETA,
            herald_mode: HeraldModeName::PnrExactOne,
            idler_efficiency: source::DEFAULT_IDLER_EFFICIENCY,
            max_pairs: source::DEFAULT_MAX_PAIRS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FockSection {
    pub dim: usize,
}

impl Default for FockSection {
    fn default() -> Self {
        Self { dim: fock::DEFAULT_DIM }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RouteName {
    #[default]
    LossThenDisplace,
    DisplaceThenLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub eta_tes: f64,
    pub eta_ot: f64,
    pub eta_bs: f64,
    pub eta_ofc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    pub route: RouteName,
}

impl Default for OpticsSection {
    fn default() -> Self {
        let b = LossBudget::default();
        Self {
            eta_tes: b.eta_tes,
            eta_ot: b.eta_ot,
            eta_bs: b.eta_bs,
            eta_ofc: b.eta_ofc,
            visibility: None,
            route: RouteName::LossThenDisplace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClipPolicyName {
    #[default]
    Saturate,
    Discard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub n_max_resolved: usize,
    pub clip_policy: ClipPolicyName,
    pub flux_limit: f64,
    pub dark_rate: f64,
    pub miscount_probability: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            n_max_resolved: detector::DEFAULT_N_MAX_RESOLVED,
            clip_policy: ClipPolicyName::Saturate,
            flux_limit: detector::DEFAULT_FLUX_LIMIT,
            dark_rate: 0.0,
            miscount_probability: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub amplitude_steps: usize,
    pub alpha_max: f64,
    pub phase_steps: usize,
    pub shots: u64,
    pub seed: u64,
    pub origin_repeats: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            amplitude_steps: tomography::scan::DEFAULT_AMPLITUDE_STEPS,
            alpha_max: tomography::scan::DEFAULT_ALPHA_MAX,
            phase_steps: tomography::scan::DEFAULT_PHASE_STEPS,
            shots: tomography::scan::DEFAULT_SHOTS,
            seed: tomography::scan::DEFAULT_SEED,
            origin_repeats: tomography::scan::DEFAULT_ORIGIN_REPEATS,
        }
    }
}

/// Detection windows for the heralding-efficiency run. The default gives
/// about 1.5e3 idler singles at the default source settings.
pub const DEFAULT_COINCIDENCE_WINDOWS: u64 = 9_500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoincidenceSection {
    pub windows: u64,
}

impl Default for CoincidenceSection {
    fn default() -> Self {
        Self {
            windows: DEFAULT_COINCIDENCE_WINDOWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub enabled: bool,
    /// Target one-sigma amplitude error used to size each calibration run.
    pub target_sigma: f64,
    pub max_shots: u64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            enabled: true,
            target_sigma: 3e-3,
            max_shots: 1_000_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    #[default]
    Csv,
    Jsonl,
}

impl DatasetFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: DatasetFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: DatasetFormat::Csv,
        }
    }
}

fn field(name: &str) -> impl FnOnce(wigner_pnr::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{name}: {e}"))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every section against the model invariants.
    pub fn validate(&self) -> Result<(), CliError> {
        self.squeezing()?;
        self.herald()?.validate().map_err(field("source"))?;
        if self.fock.dim <= self.source.max_pairs {
            return Err(CliError::Config(format!(
                "fock.dim: {} must exceed source.max_pairs = {}",
                self.fock.dim, self.source.max_pairs
            )));
        }
        self.budget()?;
        if let Some(v) = self.optics.visibility {
            if !(v > 0.0 && v <= 1.0) {
                return Err(CliError::Config(format!("optics.visibility: {v} must lie in (0, 1]")));
            }
        }
        self.detector()?;
        if self.scan.shots < 2 {
            return Err(CliError::Config(format!(
                "scan.shots: {} must be at least 2",
                self.scan.shots
            )));
        }
        self.plan()?;
        if self.coincidence.windows == 0 {
            return Err(CliError::Config("coincidence.windows: must be at least 1".into()));
        }
        if !(self.calibration.target_sigma > 0.0) {
            return Err(CliError::Config(format!(
                "calibration.target_sigma: {} must be positive",
                self.calibration.target_sigma
            )));
        }
        if self.calibration.max_shots == 0 {
            return Err(CliError::Config("calibration.max_shots: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn squeezing(&self) -> Result<SqueezingParameter, CliError> {
        SqueezingParameter::new(self.source.zeta).map_err(field("source.zeta"))
    }

    pub fn herald(&self) -> Result<HeraldConfig, CliError> {
        Ok(HeraldConfig {
            idler_efficiency: self.source.idler_efficiency,
            herald_mode: match self.source.herald_mode {
                HeraldModeName::PnrExactOne => HeraldMode::PnrExactOne,
                HeraldModeName::Threshold => HeraldMode::Threshold,
            },
            max_pairs: self.source.max_pairs,
        })
    }

    pub fn budget(&self) -> Result<LossBudget, CliError> {
        let o = &self.optics;
        LossBudget::new(o.eta_tes, o.eta_ot, o.eta_bs, o.eta_ofc).map_err(field("optics"))
    }

    pub fn detector(&self) -> Result<DetectorModel, CliError> {
        let d = &self.detector;
        let model = DetectorModel {
            n_max_resolved: d.n_max_resolved,
            clip_policy: match d.clip_policy {
                ClipPolicyName::Saturate => ClipPolicy::Saturate,
                ClipPolicyName::Discard => ClipPolicy::Discard,
            },
            flux_limit: d.flux_limit,
            dark_rate: d.dark_rate,
            miscount_probability: d.miscount_probability,
        };
        model.validate().map_err(field("detector"))?;
        Ok(model)
    }

    pub fn plan(&self) -> Result<ScanPlan, CliError> {
        let s = &self.scan;
        ScanPlan::uniform(s.amplitude_steps, s.alpha_max, s.phase_steps, s.shots, s.seed)
            .and_then(|p| p.with_origin_repeats(s.origin_repeats))
            .map_err(field("scan"))
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            route: match self.optics.route {
                RouteName::LossThenDisplace => ScanRoute::LossThenDisplace,
                RouteName::DisplaceThenLoss => ScanRoute::DisplaceThenLoss,
            },
            visibility: self.optics.visibility,
        }
    }
}
