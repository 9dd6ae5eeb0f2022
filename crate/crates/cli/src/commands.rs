use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wigner_pnr::detector::{coincidence_counts, derive_seed, detect, sample_histogram, SATURATION_WARNING_THRESHOLD};
use wigner_pnr::fock::photon_number_distribution;
use wigner_pnr::optics::{apply_loss, mode_matched_amplitude};
use wigner_pnr::source::{heralded_signal_state, tmsv_joint_distribution};
use wigner_pnr::tomography::{calibrate_alpha, calibration_shots, prepare_scan};
use wigner_pnr::{ComplexAmplitude, Error, FockDensityMatrix};

use crate::config::{DatasetFormat, RunConfig};
use crate::dataset::{CoincidenceRecord, Dataset, DatasetKind, Record};
use crate::error::CliError;
use crate::report::{analyze, grid_csv, radial_csv, summary, Report, SimulationInfo};

/// Seed streams outside the grid-index range.
const COINCIDENCE_STREAM: u64 = u64::MAX;
const CALIBRATION_STREAM: u64 = u64::MAX - 1;

/// Seed of the coincidence run for a master seed.
pub fn coincidence_seed(master: u64) -> u64 {
    derive_seed(master, COINCIDENCE_STREAM)
}

/// Amplitude below which two-photon events are too rare for a practical
/// calibration.
pub const CALIBRATION_THRESHOLD: f64 = 0.15;

pub const COUNTS_FILE: &str = "counts";
pub const CALIBRATION_COUNTS_FILE: &str = "calibration_counts";
pub const GRID_FILE: &str = "wigner_grid.csv";
pub const RADIAL_FILE: &str = "radial_profile.csv";
pub const REPORT_FILE: &str = "report.json";
pub const RECONSTRUCTION_FILE: &str = "reconstruction.json";
pub const CALIBRATION_TABLE_FILE: &str = "calibration.csv";

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<DatasetFormat>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.scan.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(format) = self.format {
            cfg.output.format = format;
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Simulated tomography and calibration datasets for a configuration.
pub struct Simulation {
    pub counts: Dataset,
    pub calibration: Option<Dataset>,
    pub info: SimulationInfo,
}

pub fn simulate_datasets(cfg: &RunConfig) -> Result<Simulation, CliError> {
    cfg.validate()?;
    let zeta = cfg.squeezing()?;
    let herald = cfg.herald()?;
    let budget = cfg.budget()?;
    let det = cfg.detector()?;
    let plan = cfg.plan()?;
    let master = plan.seed();

    let heralded = heralded_signal_state(zeta, &herald, cfg.fock.dim)?;
    let prepared = prepare_scan(&heralded.state, &plan, &det, &budget, cfg.scan_options())?;
    let grid = prepared.sample()?;

    let c = coincidence_counts(zeta, &herald, &budget, cfg.coincidence.windows, coincidence_seed(master))?;
    let coincidences = CoincidenceRecord {
        windows: c.windows,
        signal_singles: c.signal_singles,
        idler_singles: c.idler_singles,
        coincidences: c.coincidences,
    };
    let counts = Dataset::from_grid(&grid, det.n_max_resolved, master, Some(coincidences));

    let calibration = if cfg.calibration.enabled {
        let stream = derive_seed(master, CALIBRATION_STREAM);
        let mut records = Vec::new();
        for (k, &nominal) in plan.amplitudes().iter().filter(|&&a| a > 0.0).enumerate() {
            let mut actual = ComplexAmplitude::new(nominal, 0.0);
            if let Some(v) = cfg.optics.visibility {
                actual = mode_matched_amplitude(actual, v)?;
            }
            let coherent = FockDensityMatrix::coherent(actual, cfg.fock.dim)?;
            let detection = detect(&photon_number_distribution(&coherent), &det)?;
            let shots = calibration_shots(nominal, cfg.calibration.target_sigma)?.min(cfg.calibration.max_shots);
            let seed = derive_seed(stream, k as u64);
            records.push(Record {
                index: k,
                amplitude: nominal,
                phase: 0.0,
                seed,
                repeat: 0,
                counts: sample_histogram(&detection.distribution, shots, seed).counts().to_vec(),
            });
        }
        (!records.is_empty()).then(|| Dataset::new(DatasetKind::Calibration, det.n_max_resolved, master, None, records))
    } else {
        None
    };

    let lossy = apply_loss(&heralded.state, budget.product())?;
    let info = SimulationInfo {
        config: RunConfig {
            output: Default::default(),
            ..cfg.clone()
        },
        eta_total: budget.product(),
        herald_probability: heralded.herald_probability,
        pair_tail_weight: tmsv_joint_distribution(zeta, herald.max_pairs)?.tail_weight,
        model_origin_w: wigner_pnr::fock::parity_expectation(&lossy) / PI,
        max_tail_mass: prepared.max_tail_mass(),
        tail_warnings: prepared
            .points
            .iter()
            .filter(|p| p.detection.tail_mass > SATURATION_WARNING_THRESHOLD)
            .count(),
        max_displacement_leak: prepared.points.iter().map(|p| p.leaked).fold(0.0, f64::max),
    };
    Ok(Simulation {
        counts,
        calibration,
        info,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let sim = simulate_datasets(cfg)?;
    let dir = &cfg.output.dir;
    let format = cfg.output.format;
    create_dir(dir)?;
    sim.counts
        .write(&dir.join(format!("{COUNTS_FILE}.{}", format.extension())), format)?;
    if let Some(cal) = &sim.calibration {
        cal.write(&dir.join(format!("{CALIBRATION_COUNTS_FILE}.{}", format.extension())), format)?;
    }
    // analyze the serialized records so a later reconstruct sees the same input
    let analysis = analyze(&sim.counts.to_grid()?, sim.counts.header.coincidences)?;
    let report = Report {
        analysis,
        simulation: Some(sim.info),
    };
    write(&dir.join(GRID_FILE), &grid_csv(&report.analysis))?;
    write(&dir.join(RADIAL_FILE), &radial_csv(&report.analysis))?;
    write(&dir.join(REPORT_FILE), &report.to_json())?;
    Ok(report)
}

pub fn reconstruct(dataset: &Path, out_dir: &Path) -> Result<Report, CliError> {
    let data = Dataset::read(dataset)?;
    if data.header.kind != DatasetKind::Tomography {
        return Err(CliError::schema(None, "reconstruct needs a tomography dataset"));
    }
    let analysis = analyze(&data.to_grid()?, data.header.coincidences)?;
    let report = Report {
        analysis,
        simulation: None,
    };
    create_dir(out_dir)?;
    write(&out_dir.join(GRID_FILE), &grid_csv(&report.analysis))?;
    write(&out_dir.join(RADIAL_FILE), &radial_csv(&report.analysis))?;
    write(&out_dir.join(RECONSTRUCTION_FILE), &report.to_json())?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationStatus {
    Ok,
    /// Estimated, but below the practical two-photon threshold.
    LowAmplitude,
    InsufficientTwoPhotonEvents,
}

impl CalibrationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::LowAmplitude => "low_amplitude",
            Self::InsufficientTwoPhotonEvents => "insufficient_two_photon_events",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub index: usize,
    pub nominal: f64,
    pub estimate: Option<f64>,
    pub sigma: Option<f64>,
    pub shots: u64,
    pub status: CalibrationStatus,
}

impl CalibrationRow {
    pub fn error(&self) -> Option<f64> {
        self.estimate.map(|e| e - self.nominal)
    }
}

pub fn calibration_table(data: &Dataset) -> Result<Vec<CalibrationRow>, CliError> {
    if data.header.kind != DatasetKind::Calibration {
        return Err(CliError::schema(None, "calibrate needs a calibration dataset"));
    }
    data.records
        .iter()
        .map(|r| {
            let hist = wigner_pnr::detector::CountHistogram::from_counts(r.counts.clone());
            let shots = hist.shots();
            match calibrate_alpha(&hist) {
                Ok(est) => Ok(CalibrationRow {
                    index: r.index,
                    nominal: r.amplitude,
                    estimate: Some(est.value),
                    sigma: Some(est.sigma),
                    shots,
                    status: if r.amplitude < CALIBRATION_THRESHOLD {
                        CalibrationStatus::LowAmplitude
                    } else {
                        CalibrationStatus::Ok
                    },
                }),
                Err(Error::InsufficientTwoPhotonEvents { .. }) => Ok(CalibrationRow {
                    index: r.index,
                    nominal: r.amplitude,
                    estimate: None,
                    sigma: None,
                    shots,
                    status: CalibrationStatus::InsufficientTwoPhotonEvents,
                }),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

pub fn calibration_csv(rows: &[CalibrationRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("index,nominal,estimate,sigma,error,shots,status\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.index,
            r.nominal,
            opt(r.estimate),
            opt(r.sigma),
            opt(r.error()),
            r.shots,
            r.status.as_str()
        );
    }
    out
}

pub fn calibration_text(rows: &[CalibrationRow]) -> String {
    let mut out = format!("{:>8} {:>10} {:>10} {:>11} {:>12}  status\n", "nominal", "estimate", "sigma", "error", "shots");
    for r in rows {
        match (r.estimate, r.sigma) {
            (Some(e), Some(s)) => {
                let _ = write!(out, "{:>8.4} {:>10.5} {:>10.5} {:>+11.5} {:>12}", r.nominal, e, s, e - r.nominal, r.shots);
            }
            _ => {
                let _ = write!(out, "{:>8.4} {:>10} {:>10} {:>11} {:>12}", r.nominal, "-", "-", "-", r.shots);
            }
        }
        let _ = writeln!(out, "  {}", r.status.as_str());
    }
    out
}

pub fn calibrate(dataset: &Path, out_dir: &Path) -> Result<Vec<CalibrationRow>, CliError> {
    let rows = calibration_table(&Dataset::read(dataset)?)?;
    create_dir(out_dir)?;
    write(&out_dir.join(CALIBRATION_TABLE_FILE), &calibration_csv(&rows))?;
    Ok(rows)
}

pub fn report(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let report: Report =
        serde_json::from_str(&text).map_err(|e| CliError::schema(None, format!("{}: {e}", path.display())))?;
    Ok(summary(&report))
}
