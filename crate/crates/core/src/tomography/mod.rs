//! Displaced-parity Wigner tomography.
//!
//! [`estimate`] turns photon-count histograms into Wigner values,
//! [`calibration`] recovers displacement amplitudes from Poisson statistics,
//! [`scan`] drives the raster scan over phase space and [`fit`] reduces a
//! scan to the loss-mixture efficiency.

pub mod calibration;
pub mod estimate;
pub mod fit;
pub mod scan;

pub use calibration::{calibrate_alpha, calibration_shots, AmplitudeEstimate, MIN_TWO_PHOTON_EVENTS};
pub use estimate::{
    estimate_point, estimator_sigma, g2_from_histograms, heralding_ratio, wigner_from_histogram, Estimate,
};
pub use fit::{fit_eta, loss_mixture_wigner, FitResult};
pub use scan::{
    phase_average, prepare_scan, run_scan, GridPoint, PreparedPoint, PreparedScan, RadialPoint, RadialProfile,
    ScanOptions, ScanPlan, ScanRoute, WignerGrid, WignerSample,
};
