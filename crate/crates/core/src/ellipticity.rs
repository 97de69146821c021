//! Invertibility of the boundary normal family on circle boundaries.
//!
//! On a circle `M` of radius `r` with spin shift `δ` and a one-form
//! `α = a(θ) dθ` (automatically closed), the normal family is
//! `P(ξ) = D + iξ (1 - c(α))`. In the Fourier basis `e^{i(k+δ)θ}`,
//! `D = diag((k + δ)/r)` and `c(α) = i A` with `A` the Hermitian Toeplitz
//! matrix of the Fourier coefficients of `a`, so `P(ξ) = D + iξ + ξ A`.
//! The family is invertible for all real `ξ` exactly when `D` is.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::SpinStructure;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 1e-8;
/// Change in the minimum singular value tolerated when the truncation doubles.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;
const MIN_TRUNCATION: usize = 8;
const INVERSE_ITERATIONS: usize = 2_000;
const BLOCK_SIZE: usize = 6;

/// Real trigonometric series `a(θ) = a_0 + Σ_m (c_m cos mθ + s_m sin mθ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierSeries {
    pub constant: f64,
    /// `c_1, c_2, ...`
    pub cosine: Vec<f64>,
    /// `s_1, s_2, ...`
    pub sine: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            ..Self::default()
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.constant;
        for (m, c) in self.cosine.iter().enumerate() {
            v += c * ((m + 1) as f64 * theta).cos();
        }
        for (m, s) in self.sine.iter().enumerate() {
            v += s * ((m + 1) as f64 * theta).sin();
        }
        v
    }

    /// Complex coefficient `â_m` with `a(θ) = Σ_m â_m e^{imθ}`.
    pub fn coefficient(&self, m: i64) -> Complex64 {
        if m == 0 {
            return Complex64::new(self.constant, 0.0);
        }
        let idx = (m.unsigned_abs() - 1) as usize;
        let c = self.cosine.get(idx).copied().unwrap_or(0.0);
        let s = self.sine.get(idx).copied().unwrap_or(0.0);
        if m > 0 {
            Complex64::new(c / 2.0, -s / 2.0)
        } else {
            Complex64::new(c / 2.0, s / 2.0)
        }
    }

    /// `|a_0| + Σ (|c_m| + |s_m|)`, an upper bound for `sup |a|`.
    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.cosine.iter().chain(&self.sine).map(|v| v.abs()).sum::<f64>()
    }

    pub fn bandwidth(&self) -> usize {
        self.cosine.len().max(self.sine.len())
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.cosine.iter().chain(&self.sine).all(|v| v.is_finite())
    }
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFamilySpec {
    pub radius: f64,
    pub spin: SpinStructure,
    #[serde(default)]
    pub alpha: FourierSeries,
    pub xi_grid: Vec<f64>,
    /// Fourier modes `|k| <= truncation`.
    pub truncation: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl NormalFamilySpec {
    /// Family with the default `ξ` grid and threshold.
    pub fn new(radius: f64, spin: SpinStructure, alpha: FourierSeries, truncation: usize) -> Self {
        Self {
            radius,
            spin,
            alpha,
            xi_grid: default_xi_grid(radius, spin, 50),
            truncation,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidBoundary(format!(
                "circle radius must be positive, got {}",
                self.radius
            )));
        }
        if self.truncation < MIN_TRUNCATION {
            return Err(Error::InvalidArgument(format!(
                "truncation must be at least {MIN_TRUNCATION}, got {}",
                self.truncation
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidArgument("alpha coefficients must be finite".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidArgument("threshold must be positive".into()));
        }
        if self.xi_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("xi grid must be finite".into()));
        }
        if !self.xi_grid.contains(&0.0) {
            return Err(Error::InvalidArgument("xi grid must contain 0".into()));
        }
        let mut sorted = self.xi_grid.clone();
        sorted.sort_by(f64::total_cmp);
        let scale = sorted.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let symmetric = sorted
            .iter()
            .zip(sorted.iter().rev())
            .all(|(lo, hi)| (lo + hi).abs() <= 1e-12 * scale);
        if !symmetric {
            return Err(Error::InvalidArgument("xi grid must be symmetric about 0".into()));
        }
        Ok(())
    }

    fn with_truncation(&self, truncation: usize) -> Self {
        Self {
            truncation,
            ..self.clone()
        }
    }
}

/// `0` and `±10·s·j/m`, `j = 1..=m`, with `s` the spectral gap of `D`
/// (or `1/(2r)` when `D` has a zero mode).
pub fn default_xi_grid(radius: f64, spin: SpinStructure, m: usize) -> Vec<f64> {
    let gap = spin.shift() / radius;
    let scale = if gap > 0.0 { gap } else { 0.5 / radius };
    let mut grid: Vec<f64> = (1..=m).rev().map(|j| -10.0 * scale * j as f64 / m as f64).collect();
    grid.push(0.0);
    grid.extend((1..=m).map(|j| 10.0 * scale * j as f64 / m as f64));
    grid
}

/// `A` with `c(α) = i A`: entries `A_{jk} = â_{j-k}`.
pub fn alpha_toeplitz(spec: &NormalFamilySpec) -> DMatrix<Complex64> {
    let size = 2 * spec.truncation + 1;
    let band = spec.alpha.bandwidth() as i64;
    DMatrix::from_fn(size, size, |j, k| {
        let m = j as i64 - k as i64;
        if m.abs() > band {
            Complex64::new(0.0, 0.0)
        } else {
            spec.alpha.coefficient(m)
        }
    })
}

/// `P(ξ) = D + iξ (1 - c(α))` on the modes `|k| <= K`.
pub fn assemble_family(spec: &NormalFamilySpec, xi: f64) -> DMatrix<Complex64> {
    let k_max = spec.truncation as i64;
    let delta = spec.spin.shift();
    let mut m = alpha_toeplitz(spec) * Complex64::new(xi, 0.0);
    for (i, k) in (-k_max..=k_max).enumerate() {
        m[(i, i)] += Complex64::new((k as f64 + delta) / spec.radius, xi);
    }
    m
}

/// Smallest singular value by block inverse iteration on `P* P`.
///
/// A small block with a Rayleigh-Ritz step resolves clustered singular
/// values, which single-vector iteration separates only slowly.
/// Returns 0 for an exactly singular matrix.
pub fn smallest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let lu = m.clone().lu();
    let lu_adj = m.adjoint().lu();
    if !lu.is_invertible() || !lu_adj.is_invertible() {
        return 0.0;
    }
    let block = n.min(BLOCK_SIZE);
    // Deterministic start with no special symmetry.
    let start = DMatrix::from_fn(n, block, |j, c| {
        let phase = 2.0 * PI * (((j * (c + 1)) as f64 * 0.618_033_988_749_895).fract());
        Complex64::new(1.0 + phase.cos() + c as f64, phase.sin())
    });
    let mut q = start.qr().q();
    let mut estimate = f64::INFINITY;
    for _ in 0..INVERSE_ITERATIONS {
        let w = match lu_adj.solve(&q) {
            Some(w) => w,
            None => return 0.0,
        };
        // Ritz values of (P*P)^{-1} on span(q): eigenvalues of (P^{-*}q)*(P^{-*}q).
        let gram = w.adjoint() * &w;
        let top = gram
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        if !(top.is_finite() && top > 0.0) {
            return 0.0;
        }
        let next = 1.0 / top.sqrt();
        let z = match lu.solve(&w) {
            Some(z) => z,
            None => return 0.0,
        };
        q = z.qr().q();
        if (next - estimate).abs() <= 1e-15 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityVerdict {
    pub fully_elliptic: bool,
    pub min_sigma: f64,
    pub worst_xi: f64,
    pub truncation_converged: bool,
    /// Truncation at which the reported minimum was computed.
    pub truncation: usize,
}

fn grid_minimum(spec: &NormalFamilySpec) -> (f64, f64) {
    let sigmas: Vec<f64> = spec
        .xi_grid
        .par_iter()
        .map(|&xi| smallest_singular_value(&assemble_family(spec, xi)))
        .collect();
    let mut best = (f64::INFINITY, 0.0);
    for (&xi, &s) in spec.xi_grid.iter().zip(&sigmas) {
        if s < best.0 {
            best = (s, xi);
        }
    }
    best
}

/// Minimum over the `ξ` grid of the smallest singular value of `P(ξ)`,
/// checked for stability under doubling of the truncation.
pub fn scan_invertibility(spec: &NormalFamilySpec) -> Result<EllipticityVerdict> {
    spec.validate()?;
    let mut truncation = spec.truncation;
    let mut previous = grid_minimum(spec);
    let mut change = f64::INFINITY;
    for _ in 0..2 {
        truncation *= 2;
        let current = grid_minimum(&spec.with_truncation(truncation));
        change = (current.0 - previous.0).abs();
        if change < TRUNCATION_TOLERANCE {
            return Ok(EllipticityVerdict {
                fully_elliptic: current.0 > spec.threshold,
                min_sigma: current.0,
                worst_xi: current.1,
                truncation_converged: true,
                truncation,
            });
        }
        previous = current;
    }
    Err(Error::NonConvergentTruncation { truncation, change })
}
