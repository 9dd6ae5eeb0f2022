//! Analysis of a tomography dataset and its serialized forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use wigner_pnr::detector::{CountHistogram, SATURATION_WARNING_THRESHOLD};
use wigner_pnr::tomography::{
    fit_eta, g2_from_histograms, heralding_ratio, loss_mixture_wigner, phase_average, Estimate, FitResult,
    WignerGrid,
};
use wigner_pnr::ComplexAmplitude;

use crate::config::RunConfig;
use crate::dataset::CoincidenceRecord;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueSigma {
    pub value: f64,
    pub sigma: f64,
}

impl From<Estimate> for ValueSigma {
    fn from(e: Estimate) -> Self {
        Self {
            value: e.value,
            sigma: e.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub eta: f64,
    pub sigma: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub weighted: bool,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            eta: f.eta,
            sigma: f.sigma,
            chi_square: f.chi_square,
            dof: f.dof,
            weighted: f.weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginSummary {
    pub w: f64,
    pub sigma: f64,
    pub repeats: usize,
    pub shots: u64,
    /// `-w / sigma`; absent when sigma is zero.
    pub negativity_sigmas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationFlag {
    pub index: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub top_bin_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub index: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub q: f64,
    pub p: f64,
    pub w: f64,
    pub sigma: f64,
    pub shots: u64,
    pub fit: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialRow {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    pub samples: usize,
    pub fit: Option<f64>,
}

/// Everything derived from the count data alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub heralding_ratio: Option<ValueSigma>,
    pub coincidences: Option<CoincidenceRecord>,
    pub g2_zero: Option<ValueSigma>,
    pub origin: Option<OriginSummary>,
    /// Absent when the grid cannot constrain the fit.
    pub fit: Option<FitSummary>,
    pub fit_error: Option<String>,
    pub radial_fit: Option<FitSummary>,
    pub saturated: Vec<SaturationFlag>,
    pub grid: Vec<GridRow>,
    pub radial: Vec<RadialRow>,
}

/// Model-side quantities known only to a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationInfo {
    /// Configuration of the run, with the output section left at its default.
    pub config: RunConfig,
    pub eta_total: f64,
    pub herald_probability: f64,
    pub pair_tail_weight: f64,
    /// Exact `W(0)` of the lossy heralded state.
    pub model_origin_w: f64,
    /// Largest detector tail mass over the grid and the number of points
    /// above the warning threshold.
    pub max_tail_mass: f64,
    pub tail_warnings: usize,
    pub max_displacement_leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub analysis: AnalysisReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationInfo>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn analyze(grid: &WignerGrid, coincidences: Option<CoincidenceRecord>) -> Result<AnalysisReport, CliError> {
    let samples = grid.samples();
    let (fit, fit_error) = match fit_eta(&samples) {
        Ok(f) => (Some(f), None),
        Err(e @ wigner_pnr::Error::IllConditionedFit(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let eta = fit.as_ref().map(|f| f.eta);
    let profile = phase_average(grid);
    let radial_fit = fit_eta(&profile.as_samples()).ok();

    let heralding = match coincidences {
        Some(c) if c.idler_singles > 0 => Some(heralding_ratio(c.coincidences, c.idler_singles)?.into()),
        _ => None,
    };
    let origin = grid.origin();
    let g2 = origin
        .and_then(|o| g2_from_histograms(&o.histograms).ok())
        .map(ValueSigma::from);
    let origin = origin.map(|o| OriginSummary {
        w: o.sample.w,
        sigma: o.sample.sigma,
        repeats: o.histograms.len(),
        shots: o.sample.shots,
        negativity_sigmas: (o.sample.sigma > 0.0).then(|| -o.sample.w / o.sample.sigma),
    });

    let saturated = grid
        .points
        .iter()
        .filter_map(|p| {
            let pooled = CountHistogram::pooled(&p.histograms);
            let top = *pooled.counts().last()? as f64 / pooled.shots() as f64;
            (top > SATURATION_WARNING_THRESHOLD).then_some(SaturationFlag {
                index: p.index,
                amplitude: p.amplitude,
                phase: p.phase,
                top_bin_fraction: top,
            })
        })
        .collect();

    let rows = grid
        .points
        .iter()
        .map(|p| {
            let s = &p.sample;
            let (q, pp) = s.alpha.quadratures();
            let model = eta.map(|eta| loss_mixture_wigner(s.alpha, eta));
            GridRow {
                index: p.index,
                amplitude: p.amplitude,
                phase: p.phase,
                q,
                p: pp,
                w: s.w,
                sigma: s.sigma,
                shots: s.shots,
                fit: model,
                residual: model.map(|m| s.w - m),
            }
        })
        .collect();
    let radial = profile
        .points
        .iter()
        .map(|r| RadialRow {
            amplitude: r.amplitude,
            mean: r.mean,
            sigma: r.sigma,
            samples: r.samples,
            fit: eta.map(|eta| loss_mixture_wigner(ComplexAmplitude::new(r.amplitude, 0.0), eta)),
        })
        .collect();

    Ok(AnalysisReport {
        heralding_ratio: heralding,
        coincidences,
        g2_zero: g2,
        origin,
        fit: fit.as_ref().map(FitSummary::from),
        fit_error,
        radial_fit: radial_fit.as_ref().map(FitSummary::from),
        saturated,
        grid: rows,
        radial,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn grid_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("index,amplitude,phase,q,p,w,sigma,shots,fit,residual\n");
    for r in &report.grid {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.amplitude,
            r.phase,
            r.q,
            r.p,
            r.w,
            r.sigma,
            r.shots,
            opt(r.fit),
            opt(r.residual)
        );
    }
    out
}

pub fn radial_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("amplitude,mean,sigma,samples,fit\n");
    for r in &report.radial {
        let _ = writeln!(out, "{},{},{},{},{}", r.amplitude, r.mean, r.sigma, r.samples, opt(r.fit));
    }
    out
}

pub fn summary(report: &Report) -> String {
    let a = &report.analysis;
    let mut out = String::new();
    let _ = writeln!(out, "grid points: {}", a.grid.len());
    if let (Some(h), Some(c)) = (a.heralding_ratio, a.coincidences) {
        let _ = writeln!(
            out,
            "heralding ratio N_c/N_i: {:.4} +/- {:.4} ({}/{}; signal singles {})",
            h.value, h.sigma, c.coincidences, c.idler_singles, c.signal_singles
        );
    }
    if let Some(g) = a.g2_zero {
        let _ = writeln!(out, "g2(0): {:.4} +/- {:.4}", g.value, g.sigma);
    }
    if let Some(o) = &a.origin {
        let _ = write!(out, "W(0,0): {:.5} +/- {:.5} ({} datasets", o.w, o.sigma, o.repeats);
        if let Some(k) = o.negativity_sigmas {
            let _ = write!(out, ", {k:.1} sigma below zero");
        }
        out.push_str(")\n");
    }
    match (&a.fit, &a.fit_error) {
        (Some(f), _) => {
            let _ = writeln!(
                out,
                "eta fit (grid): {:.4} +/- {:.4}, chi2/dof = {:.3}",
                f.eta,
                f.sigma,
                f.chi_square / f.dof as f64
            );
        }
        (None, Some(why)) => {
            let _ = writeln!(out, "eta fit: not available ({why})");
        }
        (None, None) => {}
    }
    if let Some(f) = &a.radial_fit {
        let _ = writeln!(out, "eta fit (phase-averaged): {:.4} +/- {:.4}", f.eta, f.sigma);
    }
    if a.saturated.is_empty() {
        out.push_str("saturated points: none\n");
    } else {
        let worst = a.saturated.iter().map(|s| s.top_bin_fraction).fold(0.0, f64::max);
        let _ = writeln!(
            out,
            "saturated points: {} (top-bin fraction up to {worst:.2e})",
            a.saturated.len()
        );
    }
    if let Some(s) = &report.simulation {
        let _ = writeln!(
            out,
            "model: eta = {:.4}, W(0,0) = {:.5}, max detector tail {:.2e} ({} points above threshold)",
            s.eta_total, s.model_origin_w, s.max_tail_mass, s.tail_warnings
        );
    }
    out
}
