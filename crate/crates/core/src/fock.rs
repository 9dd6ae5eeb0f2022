//! Truncated Fock-space states and operators.
//!
//! Density matrices live in the number basis `|0>, ..., |dim - 1>`. The
//! displacement operator is obtained by exponentiating its anti-Hermitian
//! generator in an enlarged workspace and cropping, so the low-order block
//! is accurate even though the truncated `a` and `a^dagger` do not satisfy
//! the canonical commutator at the top of the space.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{factorial, hermite, laguerre};

/// Default number-basis size (photon numbers `0..=20`).
pub const DEFAULT_DIM: usize = 21;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Largest tolerated vacuum-column norm deficit of a cropped displacement.
pub const DISPLACEMENT_LEAK_TOL: f64 = 1e-6;

/// Complex phase-space amplitude, `alpha = (q + i p) / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn from_polar(modulus: f64, phase: f64) -> Self {
        Self {
            re: modulus * phase.cos(),
            im: modulus * phase.sin(),
        }
    }

    /// Amplitude of the phase-space point `(q, p)`.
    pub fn from_quadratures(q: f64, p: f64) -> Self {
        Self {
            re: q / std::f64::consts::SQRT_2,
            im: p / std::f64::consts::SQRT_2,
        }
    }

    /// Phase-space coordinates `(q, p) = (sqrt(2)|alpha| cos phi, sqrt(2)|alpha| sin phi)`.
    pub fn quadratures(self) -> (f64, f64) {
        (
            self.re * std::f64::consts::SQRT_2,
            self.im * std::f64::consts::SQRT_2,
        )
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            re: self.re * factor,
            im: self.im * factor,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl std::ops::Neg for ComplexAmplitude {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl From<Complex64> for ComplexAmplitude {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Operator in the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    elements: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch(elements.nrows(), elements.ncols()));
        }
        Ok(Self { elements })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            elements: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn adjoint(&self) -> Self {
        Self {
            elements: self.elements.adjoint(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            elements: &self.elements * &other.elements,
        }
    }

    /// Largest entry of `|U^dagger U - I|` over the first `rows` rows.
    pub fn unitarity_defect(&self, rows: usize) -> f64 {
        let gram = self.elements.adjoint() * &self.elements;
        let rows = rows.min(self.dim());
        let mut worst = 0.0f64;
        for i in 0..rows {
            for j in 0..rows {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Annihilation operator `a` truncated to `dim` levels.
pub fn annihilation(dim: usize) -> OperatorMatrix {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix { elements: a }
}

/// Creation operator `a^dagger` truncated to `dim` levels.
pub fn creation(dim: usize) -> OperatorMatrix {
    annihilation(dim).adjoint()
}

/// Number operator `N = a^dagger a`.
pub fn number(dim: usize) -> OperatorMatrix {
    let mut n = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        n[(k, k)] = Complex64::new(k as f64, 0.0);
    }
    OperatorMatrix { elements: n }
}

/// Parity operator `(-1)^N`.
pub fn parity(dim: usize) -> OperatorMatrix {
    let mut p = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        p[(k, k)] = Complex64::new(parity_sign(k), 0.0);
    }
    OperatorMatrix { elements: p }
}

#[inline]
pub(crate) fn parity_sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Workspace size used to build a `dim`-level displacement by `alpha`.
pub fn displacement_workspace(dim: usize, alpha: ComplexAmplitude) -> usize {
    let extra = (8.0 * alpha.norm_sqr()).ceil() as usize;
    (2 * dim).max(dim + extra + 10)
}

/// Matrix of `D(alpha) = exp(alpha a^dagger - alpha^* a)` in the number basis.
///
/// The exponential is evaluated in a workspace of
/// [`displacement_workspace`] levels by scaling and squaring, then cropped to
/// `dim`. Fails with [`Error::Truncation`] when the cropped vacuum column has
/// lost more than [`DISPLACEMENT_LEAK_TOL`] of its norm.
pub fn displacement_matrix(alpha: ComplexAmplitude, dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(Error::InvalidParameter {
            name: "dim",
            value: dim as f64,
            reason: "displacement needs at least two levels",
        });
    }
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha.norm(),
            reason: "must be finite",
        });
    }
    if alpha == ComplexAmplitude::ZERO {
        return Ok(OperatorMatrix::identity(dim));
    }
    let work = displacement_workspace(dim, alpha);
    let a = annihilation(work).into_inner();
    let ad = a.adjoint();
    let z = alpha.to_complex();
    let generator = ad * z - a * z.conj();
    let full = expm(&generator);
    let cropped = full.view((0, 0), (dim, dim)).into_owned();

    let vacuum_norm: f64 = (0..dim).map(|m| cropped[(m, 0)].norm_sqr()).sum();
    let leaked = 1.0 - vacuum_norm;
    if leaked > DISPLACEMENT_LEAK_TOL {
        return Err(Error::Truncation {
            what: "displacement vacuum column",
            leaked,
            tolerance: DISPLACEMENT_LEAK_TOL,
        });
    }
    Ok(OperatorMatrix { elements: cropped })
}

fn norm_1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
fn expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let dim = m.nrows();
    let norm = norm_1(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut sum = DMatrix::<Complex64>::identity(dim, dim);
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    for k in 1..=40 {
        term = (&term * &scaled) / Complex64::new(k as f64, 0.0);
        sum += &term;
        if norm_1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Columns `0..cols` of `D(alpha)` restricted to rows `0..rows`.
///
/// Built from the coherent state `D(alpha)|0> = |alpha>` with the ladder
/// relation `D(alpha)|j+1> = (a^dagger - alpha^*) D(alpha)|j> / sqrt(j+1)`.
/// `a^dagger` only draws on lower rows, so every kept row is exact.
pub(crate) fn displacement_columns(
    alpha: ComplexAmplitude,
    rows: usize,
    cols: usize,
) -> DMatrix<Complex64> {
    let z = alpha.to_complex();
    let span = rows;
    let mut col = vec![Complex64::new(0.0, 0.0); span];
    col[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 1..span {
        col[k] = col[k - 1] * z / (k as f64).sqrt();
    }
    let mut out = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for k in 0..rows {
            out[(k, j)] = col[k];
        }
        if j + 1 == cols {
            break;
        }
        let norm = ((j + 1) as f64).sqrt();
        let mut next = vec![Complex64::new(0.0, 0.0); span];
        for k in 0..span {
            let raised = if k > 0 {
                col[k - 1] * (k as f64).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            };
            next[k] = (raised - z.conj() * col[k]) / norm;
        }
        col = next;
    }
    out
}

/// Probability distribution over detected or occupied photon numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::DegenerateInput("empty photon distribution".into()));
        }
        if let Some(&bad) = probs.iter().find(|p| !p.is_finite() || **p < -1e-12) {
            return Err(Error::InvalidParameter {
                name: "probability",
                value: bad,
                reason: "must be finite and nonnegative",
            });
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `n` photons; zero past the end.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `sum_n (-1)^n p_n`.
    pub fn parity(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| parity_sign(n) * p)
            .sum()
    }

    /// `<N(N-1)> / <N>^2` from the distribution moments.
    pub fn g2_zero(&self) -> Result<f64> {
        let mean = self.mean();
        if mean < 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "mean photon number {mean:.3e} too small for g2(0)"
            )));
        }
        let second: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64) * (n as f64 - 1.0) * p)
            .sum();
        Ok(second / (mean * mean))
    }
}

/// Density matrix in a truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    elements: DMatrix<Complex64>,
}

impl FockDensityMatrix {
    /// Wraps and validates a matrix (Hermitian, unit trace, positive).
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch(elements.nrows(), elements.ncols()));
        }
        let rho = Self { elements };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(elements: DMatrix<Complex64>) -> Self {
        Self { elements }
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim).expect("vacuum fits any nonzero dimension")
    }

    /// Number state `|n><n|`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n as f64,
                reason: "photon number must be below the truncation dimension",
            });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self { elements: m })
    }

    /// Diagonal state with the given populations, padded to `dim`.
    pub fn from_diagonal(populations: &[f64], dim: usize) -> Result<Self> {
        if populations.len() > dim {
            return Err(Error::DimensionMismatch(populations.len(), dim));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for (n, &p) in populations.iter().enumerate() {
            m[(n, n)] = Complex64::new(p, 0.0);
        }
        Self::from_matrix(m)
    }

    /// Pure state `|psi><psi|` from number-basis amplitudes (normalized here).
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::DegenerateInput("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|z| z / norm.sqrt()),
        );
        Ok(Self {
            elements: &v * v.adjoint(),
        })
    }

    /// Coherent state `|alpha><alpha|`. Fails if more than
    /// [`DISPLACEMENT_LEAK_TOL`] of the Poisson weight lies past `dim`.
    pub fn coherent(alpha: ComplexAmplitude, dim: usize) -> Result<Self> {
        let col = displacement_columns(alpha, dim, 1);
        let kept: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        if 1.0 - kept > DISPLACEMENT_LEAK_TOL {
            return Err(Error::Truncation {
                what: "coherent state",
                leaked: 1.0 - kept,
                tolerance: DISPLACEMENT_LEAK_TOL,
            });
        }
        let amps: Vec<Complex64> = col.iter().copied().collect();
        Self::pure(&amps)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.elements[(n, n)].re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.elements[(i, j)] - self.elements[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity violated by {herm:.3e}"
            )));
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        crate::error::check_unit_interval("weight", weight)?;
        Ok(Self {
            elements: &self.elements * Complex64::new(weight, 0.0)
                + &other.elements * Complex64::new(1.0 - weight, 0.0),
        })
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        (&self.elements - &other.elements)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Same state in `dim` levels; shrinking drops rows and columns.
    pub fn resized(&self, dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        let keep = dim.min(self.dim());
        m.view_mut((0, 0), (keep, keep))
            .copy_from(&self.elements.view((0, 0), (keep, keep)));
        Self { elements: m }
    }

    /// Scales by `1 / trace`, returning the weight that was missing.
    pub(crate) fn renormalized(mut self) -> (Self, f64) {
        let trace = self.trace();
        if trace > 0.0 {
            self.elements /= Complex64::new(trace, 0.0);
        }
        (self, 1.0 - trace)
    }

    /// Index past the last row/column carrying nonzero weight.
    pub(crate) fn support(&self) -> usize {
        let d = self.dim();
        (0..d)
            .rev()
            .find(|&k| (0..d).any(|j| self.elements[(k, j)].norm() > 0.0))
            .map_or(0, |k| k + 1)
    }
}

/// `sum_n (-1)^n rho_nn`, the parity expectation (without `1/pi`).
pub fn parity_expectation(rho: &FockDensityMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(n, p)| parity_sign(n) * p)
        .sum()
}

/// `W(alpha) = (1/pi) <(-1)^N>` over `D^dagger(alpha) rho D(alpha)`.
///
/// Only the columns of the displacement that touch the support of `rho` are
/// needed, so they are built directly (see `displacement_columns`) with enough
/// rows to hold the displaced state; this keeps large `|alpha|` cheap.
pub fn wigner_exact(rho: &FockDensityMatrix, alpha: ComplexAmplitude) -> Result<f64> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha.norm(),
            reason: "must be finite",
        });
    }
    let support = rho.support();
    if support == 0 {
        return Ok(0.0);
    }
    let r = alpha.norm();
    let rows = support + (r * r + 12.0 * r).ceil() as usize + 40;
    // D^dagger(alpha) = D(-alpha)
    let cols = displacement_columns(-alpha, rows, support);
    let block = rho.elements.view((0, 0), (support, support));
    // diagonal of cols * block * cols^dagger only
    let half = &cols * block;
    let populations: Vec<f64> = (0..rows)
        .map(|k| (0..support).map(|j| (half[(k, j)] * cols[(k, j)].conj()).re).sum())
        .collect();
    let leaked = 1.0 - populations.iter().sum::<f64>() / rho.trace();
    if leaked.abs() > DISPLACEMENT_LEAK_TOL {
        return Err(Error::Truncation {
            what: "displaced state for Wigner evaluation",
            leaked,
            tolerance: DISPLACEMENT_LEAK_TOL,
        });
    }
    let parity: f64 = populations
        .iter()
        .enumerate()
        .map(|(k, p)| parity_sign(k) * p)
        .sum();
    Ok(parity / PI)
}

/// Closed-form Wigner function of `|n><n|`:
/// `(-1)^n / pi * exp(-2|alpha|^2) * L_n(4|alpha|^2)`.
pub fn fock_wigner(n: usize, alpha: ComplexAmplitude) -> f64 {
    let x = alpha.norm_sqr();
    parity_sign(n) / PI * (-2.0 * x).exp() * laguerre(n, 4.0 * x)
}

/// Photon-number populations `p_n = rho_nn`.
pub fn photon_number_distribution(rho: &FockDensityMatrix) -> PhotonDistribution {
    PhotonDistribution {
        probs: rho.populations().into_iter().map(|p| p.max(0.0)).collect(),
    }
}

pub fn g2_zero(rho: &FockDensityMatrix) -> Result<f64> {
    photon_number_distribution(rho).g2_zero()
}

/// `|psi_n(q)|^2` for the oscillator eigenfunctions with `hbar = 1`.
pub fn quadrature_wavefunction_density(n: usize, q: f64) -> f64 {
    let norm = 1.0 / (PI.sqrt() * 2f64.powi(n as i32) * factorial(n));
    let h = hermite(n, q);
    norm * h * h * (-q * q).exp()
}
