//! Closed boundary manifolds `(M, h)` with explicitly enumerable Dirac spectra.
//!
//! Two families are supported: round circles with either spin structure, and
//! synthetic spectra supplied by a generator. Synthetic models let callers
//! inject exact spectra of higher-dimensional boundaries without this crate
//! having to know how they were obtained.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Upper bound on generator entries visited while enumerating a synthetic window.
const ENUMERATION_BUDGET: usize = 50_000_000;

/// Upper bound on the number of terms a zeta partial sum may use.
const ZETA_TERM_BUDGET: usize = 200_000_000;

/// Spin structure on a circle: periodic spinors (`Trivial`) carry a zero mode,
/// antiperiodic ones (`Nontrivial`) do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinStructure {
    Trivial,
    Nontrivial,
}

impl SpinStructure {
    /// Shift of the Fourier index: spectrum is `(k + shift) / r`, `k ∈ ℤ`.
    pub fn shift(self) -> f64 {
        match self {
            SpinStructure::Trivial => 0.0,
            SpinStructure::Nontrivial => 0.5,
        }
    }
}

/// One eigenvalue of the boundary Dirac operator together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub value: f64,
    pub multiplicity: u32,
}

impl Mode {
    pub fn new(value: f64, multiplicity: u32) -> Self {
        Self { value, multiplicity }
    }
}

type Generator = dyn Fn(usize) -> Mode + Send + Sync;

/// A spectrum given by a generator `index -> (μ, multiplicity)`.
///
/// The generator must produce eigenvalues with nondecreasing `|μ|` and
/// multiplicities of at least one; violations are reported as
/// [`Error::InvalidBoundary`] by the enumerating operations.
#[derive(Clone)]
pub struct SyntheticSpectrum {
    generator: Arc<Generator>,
    dimension: usize,
    volume: Option<f64>,
    growth_floor: Option<f64>,
}

impl SyntheticSpectrum {
    pub fn new<F>(dimension: usize, generator: F) -> Result<Self>
    where
        F: Fn(usize) -> Mode + Send + Sync + 'static,
    {
        if dimension == 0 {
            return Err(Error::InvalidBoundary(
                "boundary dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            generator: Arc::new(generator),
            dimension,
            volume: None,
            growth_floor: None,
        })
    }

    /// Riemannian volume of `(M, h)`; needed for the volume-type Weyl constants.
    pub fn with_volume(mut self, volume: f64) -> Result<Self> {
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::InvalidBoundary(format!(
                "volume must be positive and finite, got {volume}"
            )));
        }
        self.volume = Some(volume);
        Ok(self)
    }

    /// Declares `|μ_j| >= c · j^{1/m}` for the `j`-th eigenvalue counted with
    /// multiplicity (1-based). This is what makes zeta tails boundable.
    pub fn with_growth_floor(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidBoundary(format!(
                "growth floor must be positive and finite, got {c}"
            )));
        }
        self.growth_floor = Some(c);
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mode(&self, index: usize) -> Mode {
        (self.generator)(index)
    }
}

impl fmt::Debug for SyntheticSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyntheticSpectrum")
            .field("dimension", &self.dimension)
            .field("volume", &self.volume)
            .field("growth_floor", &self.growth_floor)
            .finish_non_exhaustive()
    }
}

/// Closed boundary manifold with a known Dirac spectrum.
#[derive(Debug, Clone)]
pub enum BoundaryModel {
    Circle { radius: f64, spin: SpinStructure },
    Synthetic(SyntheticSpectrum),
}

/// Result of [`spectral_gap`]: `gap > 0` exactly when the operator is invertible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGapReport {
    pub invertible: bool,
    pub gap: f64,
}

impl BoundaryModel {
    pub fn circle(radius: f64, spin: SpinStructure) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBoundary(format!(
                "circle radius must be positive and finite, got {radius}"
            )));
        }
        Ok(BoundaryModel::Circle { radius, spin })
    }

    /// Dimension `m` of the boundary manifold.
    pub fn dimension(&self) -> usize {
        match self {
            BoundaryModel::Circle { .. } => 1,
            BoundaryModel::Synthetic(s) => s.dimension,
        }
    }

    /// Riemannian volume of `(M, h)`, if known.
    pub fn volume(&self) -> Option<f64> {
        match self {
            BoundaryModel::Circle { radius, .. } => Some(2.0 * PI * radius),
            BoundaryModel::Synthetic(s) => s.volume,
        }
    }

    /// Lazily walks the spectrum in order of increasing `|μ|`.
    ///
    /// Circle modes of equal magnitude come out negative first. No validation
    /// is done here; see [`BoundaryModel::modes_up_to`].
    pub fn magnitude_ordered(&self) -> Box<dyn Iterator<Item = Mode> + Send + '_> {
        match *self {
            BoundaryModel::Circle { radius, spin } => {
                let shift = spin.shift();
                let iter = (0u64..).flat_map(move |j| {
                    let mu = (j as f64 + shift) / radius;
                    if mu == 0.0 {
                        vec![Mode::new(0.0, 1)]
                    } else {
                        vec![Mode::new(-mu, 1), Mode::new(mu, 1)]
                    }
                });
                Box::new(iter)
            }
            BoundaryModel::Synthetic(ref s) => Box::new((0usize..).map(move |i| s.mode(i))),
        }
    }

    /// All modes with `|μ| <= mu_max` in magnitude order (negative first on ties).
    pub fn modes_up_to(&self, mu_max: f64) -> Result<Vec<Mode>> {
        if mu_max.is_nan() || mu_max.is_infinite() {
            return Err(Error::InvalidArgument(format!(
                "mu_max must be finite, got {mu_max}"
            )));
        }
        let mut out = Vec::new();
        let mut previous = 0.0f64;
        for (index, mode) in self.magnitude_ordered().enumerate() {
            if index >= ENUMERATION_BUDGET {
                return Err(Error::InvalidBoundary(format!(
                    "generator did not leave the window |mu| <= {mu_max} within {ENUMERATION_BUDGET} entries"
                )));
            }
            if !mode.value.is_finite() || mode.multiplicity == 0 {
                return Err(Error::InvalidBoundary(format!(
                    "entry {index} is ({}, {}); need finite value and multiplicity >= 1",
                    mode.value, mode.multiplicity
                )));
            }
            let magnitude = mode.value.abs();
            if magnitude < previous {
                return Err(Error::InvalidBoundary(format!(
                    "entry {index} has |mu| = {magnitude} below the previous {previous}"
                )));
            }
            previous = magnitude;
            if magnitude > mu_max {
                break;
            }
            out.push(mode);
        }
        out.sort_by(|a, b| {
            a.value
                .abs()
                .total_cmp(&b.value.abs())
                .then(a.value.total_cmp(&b.value))
        });
        Ok(out)
    }

    /// Smallest `|μ|` beyond `mu_max`, i.e. the first excluded magnitude.
    pub fn next_magnitude_above(&self, mu_max: f64) -> Result<f64> {
        for (index, mode) in self.magnitude_ordered().enumerate() {
            if index >= ENUMERATION_BUDGET {
                break;
            }
            if mode.value.abs() > mu_max {
                return Ok(mode.value.abs());
            }
        }
        Err(Error::InvalidBoundary(format!(
            "no eigenvalue above {mu_max} within {ENUMERATION_BUDGET} entries"
        )))
    }
}

/// Every spectrum element with `|μ| <= mu_max`, sorted by value.
pub fn enumerate_modes(model: &BoundaryModel, mu_max: f64) -> Result<Vec<Mode>> {
    let mut modes = model.modes_up_to(mu_max)?;
    modes.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(modes)
}

pub fn spectral_gap(model: &BoundaryModel) -> SpectralGapReport {
    let gap = match *model {
        BoundaryModel::Circle { radius, spin } => spin.shift() / radius,
        BoundaryModel::Synthetic(ref s) => s.mode(0).value.abs(),
    };
    SpectralGapReport {
        invertible: gap > 0.0,
        gap,
    }
}

/// A zeta value together with the truncation that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaSum {
    pub value: f64,
    /// Number of leading spectrum entries (magnitude order) in the partial sum.
    pub terms: usize,
    pub tail_lower: f64,
    pub tail_upper: f64,
}

/// `Σ mult · |μ|^{-s}` to within `eps`.
pub fn zeta_boundary(model: &BoundaryModel, s: f64, eps: f64) -> Result<f64> {
    zeta_boundary_detailed(model, s, eps).map(|z| z.value)
}

/// Zeta value with its truncation data.
///
/// The truncation is the first one whose rigorous tail bound is at most `eps`;
/// the returned value is the partial sum plus the midpoint of the lower and
/// upper tail bounds, so every longer partial sum stays within `eps` of it.
pub fn zeta_boundary_detailed(model: &BoundaryModel, s: f64, eps: f64) -> Result<ZetaSum> {
    if !(eps.is_finite() && eps > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need finite s and eps > 0, got s = {s}, eps = {eps}"
        )));
    }
    let dimension = model.dimension();
    if s <= dimension as f64 {
        return Err(Error::DivergentRegion { s, dimension });
    }
    if !spectral_gap(model).invertible {
        return Err(Error::NonInvertibleBoundary);
    }
    match *model {
        BoundaryModel::Circle { radius, spin } => circle_zeta(radius, spin.shift(), s, eps),
        BoundaryModel::Synthetic(ref spectrum) => synthetic_zeta(spectrum, s, eps),
    }
}

// Nontrivial circle: Σ_{j>=0} 2 (r/(j+1/2))^s, tail after pairs 0..=K bounded by
// ∫_{K+1}^∞ <= tail <= ∫_K^∞ of 2 r^s (u+1/2)^{-s} du.
fn circle_zeta(radius: f64, shift: f64, s: f64, eps: f64) -> Result<ZetaSum> {
    let scale = 2.0 * radius.powf(s);
    let upper = |k: f64| scale * (k + shift).powf(1.0 - s) / (s - 1.0);
    // Smallest K with upper(K) <= eps.
    let needed = (scale / ((s - 1.0) * eps)).powf(1.0 / (s - 1.0)) - shift;
    if !(needed < ZETA_TERM_BUDGET as f64 / 2.0) {
        return Err(Error::TruncationBudget {
            needed: 2.0 * needed,
            budget: ZETA_TERM_BUDGET,
        });
    }
    let mut last = needed.ceil().max(0.0) as usize;
    while last > 0 && upper((last - 1) as f64) <= eps {
        last -= 1;
    }
    while upper(last as f64) > eps {
        last += 1;
    }
    let partial: f64 = (0..=last)
        .rev()
        .map(|j| scale * (j as f64 + shift).powf(-s))
        .sum();
    let tail_upper = upper(last as f64);
    let tail_lower = upper(last as f64 + 1.0);
    Ok(ZetaSum {
        value: partial + 0.5 * (tail_upper + tail_lower),
        terms: 2 * (last + 1),
        tail_lower,
        tail_upper,
    })
}

// Synthetic: with |μ_j| >= c j^{1/m}, the tail after J eigenvalues (with
// multiplicity) is at most c^{-s} J^{1-s/m} / (s/m - 1).
fn synthetic_zeta(spectrum: &SyntheticSpectrum, s: f64, eps: f64) -> Result<ZetaSum> {
    let c = spectrum.growth_floor.ok_or_else(|| {
        Error::InvalidBoundary("zeta of a synthetic spectrum needs a declared growth floor".into())
    })?;
    let exponent = s / spectrum.dimension as f64 - 1.0;
    let bound = |j: f64| c.powf(-s) * j.powf(-exponent) / exponent;
    let needed = (c.powf(-s) / (exponent * eps)).powf(1.0 / exponent);
    if !(needed < ZETA_TERM_BUDGET as f64) {
        return Err(Error::TruncationBudget {
            needed,
            budget: ZETA_TERM_BUDGET,
        });
    }
    let mut terms = Vec::new();
    let mut counted = 0u64;
    let mut previous = 0.0f64;
    let mut index = 0usize;
    loop {
        let mode = spectrum.mode(index);
        if !mode.value.is_finite() || mode.multiplicity == 0 || mode.value.abs() < previous {
            return Err(Error::InvalidBoundary(format!(
                "entry {index} = ({}, {}) violates the generator contract",
                mode.value, mode.multiplicity
            )));
        }
        previous = mode.value.abs();
        terms.push(f64::from(mode.multiplicity) * mode.value.abs().powf(-s));
        counted += u64::from(mode.multiplicity);
        index += 1;
        if bound(counted as f64) <= eps {
            break;
        }
    }
    let partial: f64 = terms.iter().rev().sum();
    let tail_upper = bound(counted as f64);
    Ok(ZetaSum {
        value: partial + 0.5 * tail_upper,
        terms: index,
        tail_lower: 0.0,
        tail_upper,
    })
}

/// Plain partial sum over the first `terms` spectrum entries in magnitude order.
pub fn zeta_partial_sum(model: &BoundaryModel, s: f64, terms: usize) -> f64 {
    let values: Vec<f64> = model
        .magnitude_ordered()
        .take(terms)
        .map(|m| f64::from(m.multiplicity) * m.value.abs().powf(-s))
        .collect();
    values.iter().rev().sum()
}
