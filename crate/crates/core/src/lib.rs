//! Photon-counting tomography of heralded single-photon states.
//!
//! The crate follows the measurement chain of a displaced-parity Wigner
//! function experiment:
//!
//! - [`fock`]: truncated number-basis states, displacement operators and the
//!   analytic Wigner/quadrature references used to check everything else.
//! - [`source`]: two-mode squeezed vacuum and the heralding projection.
//! - [`optics`]: photon loss, ideal displacement and the exact
//!   unbalanced-beamsplitter displacement.
//! - [`detector`]: count-level model of a photon-number-resolving detector and
//!   seeded multinomial sampling.
//! - [`tomography`]: scan planning, the parity estimator, amplitude
//!   calibration, phase averaging and the loss-mixture fit.
//!
//! Convention throughout: `alpha = (q + i p) / sqrt(2)` with `hbar = 1`.

#![forbid(unsafe_code)]

pub mod detector;
pub mod error;
pub mod fock;
pub mod optics;
pub mod source;
pub mod tomography;

mod special;

pub use error::{Error, Result};
pub use fock::{ComplexAmplitude, FockDensityMatrix, OperatorMatrix, PhotonDistribution};
