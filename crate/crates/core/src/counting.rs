//! The global counting function `N_p(λ)` assembled from per-mode Sturm counts,
//! its phase-space oracle, and the self-adjointness and discreteness scans.
//!
//! A boundary eigenvalue `μ` contributes the Schrödinger pair `H_±(μ)` on the
//! half line (or on `[0, t_max)` for horns). A Dirac eigenvalue `s` with
//! `|s| < λ` corresponds to an eigenvalue of `H_±` below `λ²`. For even `n`
//! every signed boundary eigenvalue contributes both `H_+` and `H_-`; for odd
//! `n` it contributes `H_+(μ)` only, which is `H_-(-μ)`, so a pair `±μ`
//! contributes one full Schrödinger pair.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{spectral_gap, BoundaryModel, Mode};
use crate::quadrature::{self, Tolerance};
use crate::radial::{mode_problem, Component, CuspModelSpec, ModeProblem};
use crate::tridiag::{discretize_with_step, pivot_floor, SturmCounter, TridiagSym};
use crate::{Error, Result};

const TURNING_BISECTIONS: usize = 200;
const EMPTINESS_RETRIES: usize = 30;
const CUTOFF_RETRIES: usize = 1_000;

/// Discretization controls for [`count_states`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountTolerances {
    pub points_per_wavelength: f64,
    pub domain_safety_margin: f64,
    /// Relative count drift between successive grid levels accepted as converged.
    pub convergence: f64,
    pub max_refinements: usize,
}

impl Default for CountTolerances {
    fn default() -> Self {
        Self {
            points_per_wavelength: 10.0,
            domain_safety_margin: 0.2,
            convergence: 0.01,
            max_refinements: 6,
        }
    }
}

impl CountTolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.points_per_wavelength >= 10.0) || !self.points_per_wavelength.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "points_per_wavelength must be >= 10, got {}",
                self.points_per_wavelength
            )));
        }
        if !(self.domain_safety_margin >= 0.2) || !self.domain_safety_margin.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "domain_safety_margin must be >= 0.2, got {}",
                self.domain_safety_margin
            )));
        }
        if !(self.convergence > 0.0 && self.convergence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "convergence threshold must lie in (0, 1), got {}",
                self.convergence
            )));
        }
        if self.max_refinements == 0 {
            return Err(Error::InvalidArgument(
                "max_refinements must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Coarsest grid step: `points_per_wavelength` points per `2π/k`, `k = max(λ, 1)`.
    pub fn base_step(&self, lambda: f64) -> f64 {
        2.0 * PI / (lambda.max(1.0) * self.points_per_wavelength)
    }
}

#[derive(Debug, Clone)]
pub struct CountRequest {
    pub spec: CuspModelSpec,
    pub model: BoundaryModel,
    pub lambda: f64,
    pub tolerances: CountTolerances,
}

impl CountRequest {
    pub fn new(spec: CuspModelSpec, model: BoundaryModel, lambda: f64) -> Self {
        Self {
            spec,
            model,
            lambda,
            tolerances: CountTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLevel {
    pub step: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub count: u64,
    pub modes_used: usize,
    pub semiclassical: f64,
    pub grid_levels: Vec<GridLevel>,
    pub wallclock: f64,
}

/// One boundary magnitude `|μ|` with the weights of its two Schrödinger components.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Magnitude {
    value: f64,
    plus: u64,
    minus: u64,
}

fn group_magnitudes(modes: &[Mode], dimension: usize) -> Vec<Magnitude> {
    let mut out: Vec<Magnitude> = Vec::new();
    for mode in modes {
        let value = mode.value.abs();
        let mult = u64::from(mode.multiplicity);
        let (plus, minus) = if dimension % 2 == 0 {
            (mult, mult)
        } else if mode.value > 0.0 {
            (mult, 0)
        } else {
            (0, mult)
        };
        match out.last_mut() {
            Some(last) if last.value == value => {
                last.plus += plus;
                last.minus += minus;
            }
            _ => out.push(Magnitude { value, plus, minus }),
        }
    }
    out
}

fn require_pure_point(spec: &CuspModelSpec, model: &BoundaryModel) -> Result<()> {
    spec.validate()?;
    if !(spec.power > 0.0) {
        return Err(Error::NotPurePoint {
            reason: format!("pure point spectrum requires p > 0, got p = {}", spec.power),
        });
    }
    if !spectral_gap(model).invertible {
        if spec.power > 1.0 {
            return Err(Error::ZeroModeUnsafe { p: spec.power });
        }
        return Err(Error::NotPurePoint {
            reason: "a boundary zero mode leaves a free radial half-line with essential spectrum".into(),
        });
    }
    Ok(())
}

fn require_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Arclength `t*` past which the chosen potential stays above `level`.
///
/// `component = None` tracks `min(q_+, q_-)`. Returns `Some(0.0)` when the
/// whole domain is forbidden and `None` when the potential never exceeds the
/// level (zero mode or `p <= 0`).
pub fn turning_point(problem: &ModeProblem, component: Option<Component>, level: f64) -> Option<f64> {
    let warp = problem.warp();
    let p = warp.power();
    let mu = problem.mu();
    if !(p > 0.0) || mu == 0.0 {
        return None;
    }
    let magnitude = mu.abs();
    // q = x^{-2p} (μ² + s |μ| p x), with s the sign in front of the derivative term.
    let sign = match component {
        None => -1.0,
        Some(Component::Plus) => mu.signum(),
        Some(Component::Minus) => -mu.signum(),
    };
    let q_at = |log_x: f64| (-2.0 * p * log_x).exp() * (mu * mu + sign * magnitude * p * log_x.exp());
    // q is decreasing in x below x_m = 2|μ| / (s(1 - 2p)) and increasing above it.
    let slope = sign * (1.0 - 2.0 * p);
    let x_hi = if slope > 0.0 {
        warp.cutoff().min(2.0 * magnitude / slope)
    } else {
        warp.cutoff()
    };
    let mut hi = x_hi.ln();
    if q_at(hi) > level {
        return Some(0.0);
    }
    let mut width = 1.0;
    let mut lo = hi - width;
    while q_at(lo) <= level {
        hi = lo;
        width *= 2.0;
        lo = hi - width;
        if !lo.is_finite() {
            return None;
        }
    }
    for _ in 0..TURNING_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q_at(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(warp.arclength(lo.exp()))
}

/// Sturm counts of `H_+` and `H_-` on nodes `i·h`, `i = 1..=n`, at each shift.
///
/// Matrix-free; agrees exactly with counting the [`TridiagSym`] built by
/// [`mode_matrix`] with the same `h` and `n`.
fn count_profile(problem: &ModeProblem, h: f64, n: usize, shifts: &[f64]) -> Result<Vec<(u64, u64)>> {
    let off = -1.0 / (h * h);
    let kinetic = 2.0 / (h * h);
    let floor = pivot_floor(off.abs());
    let mut plus: Vec<SturmCounter> = shifts.iter().map(|&s| SturmCounter::new(s, floor)).collect();
    let mut minus = plus.clone();
    for i in 1..=n {
        let t = i as f64 * h;
        let (qp, qm) = problem.q_pair(t);
        if !(qp.is_finite() && qm.is_finite()) {
            return Err(Error::NonFinitePotential { t });
        }
        for c in plus.iter_mut() {
            c.push(kinetic + qp, off);
        }
        for c in minus.iter_mut() {
            c.push(kinetic + qm, off);
        }
    }
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| (a.count() as u64, b.count() as u64))
        .collect())
}

/// The discretized `H_±(μ)` on `[0, (n + 1)·h]` as an explicit matrix.
pub fn mode_matrix(problem: &ModeProblem, component: Component, h: f64, n: usize) -> Result<TridiagSym> {
    discretize_with_step(|t| problem.q(component, t), 0.0, h, n)
}

/// Interior point count for a Dirichlet box of length at least `length` at step `h`.
fn interior_points(length: f64, h: f64) -> usize {
    ((length / h).ceil() as usize).saturating_sub(1).max(2)
}

/// Largest `|μ|` that can contribute below `λ`: `λ·sup w·(1 + margin)`, enlarged
/// until the first excluded magnitude is verified to contribute nothing.
pub fn mode_cutoff(spec: &CuspModelSpec, model: &BoundaryModel, lambda: f64, tolerances: &CountTolerances) -> Result<f64> {
    spec.validate()?;
    require_lambda(lambda)?;
    let sup = spec.warp().sup_warp();
    if !sup.is_finite() {
        return Err(Error::NotPurePoint {
            reason: format!("p = {} < 0 has an unbounded warp", spec.power),
        });
    }
    let mut mu_max = lambda * sup * (1.0 + tolerances.domain_safety_margin);
    if !(spec.power > 0.0) {
        return Ok(mu_max);
    }
    let h = tolerances.base_step(lambda);
    let level = lambda * lambda;
    for _ in 0..CUTOFF_RETRIES {
        let next = model.next_magnitude_above(mu_max)?;
        let problem = mode_problem(spec, next);
        let reach = turning_point(&problem, None, level).unwrap_or(0.0);
        let length = reach.max(4.0 * 2.0 * PI / lambda.max(1.0));
        let n = interior_points(length, h);
        let counts = count_profile(&problem, h, n, &[level])?;
        if counts[0] == (0, 0) {
            return Ok(mu_max);
        }
        mu_max = next;
    }
    Err(Error::InvalidArgument(format!(
        "mode cutoff did not settle after {CUTOFF_RETRIES} enlargements"
    )))
}

/// Domain length per grid level, kept inside a finite horn.
fn level_length(base: f64, level: usize, domain_end: Option<f64>) -> f64 {
    let grown = base * 1.5f64.powi(level as i32);
    match domain_end {
        Some(end) => grown.min(end * (1.0 - 1e-6)),
        None => grown,
    }
}

pub fn count_states(req: &CountRequest) -> Result<CountResult> {
    let started = Instant::now();
    require_pure_point(&req.spec, &req.model)?;
    require_lambda(req.lambda)?;
    req.tolerances.validate()?;
    let spec = &req.spec;
    let lambda = req.lambda;
    let tol = &req.tolerances;
    let level = lambda * lambda;

    let mu_max = mode_cutoff(spec, &req.model, lambda, tol)?;
    let modes = req.model.modes_up_to(mu_max)?;
    let magnitudes = group_magnitudes(&modes, spec.dimension);
    let h0 = tol.base_step(lambda);
    let domain_end = spec.warp().domain_end();
    let min_length = 4.0 * 2.0 * PI / lambda.max(1.0);

    // Turning-point truncation with margin, then an emptiness check beyond it.
    let bases: Vec<f64> = magnitudes
        .par_iter()
        .map(|m| -> Result<f64> {
            let problem = mode_problem(spec, m.value);
            let margin_level = level * (1.0 + tol.domain_safety_margin);
            let mut base = turning_point(&problem, None, margin_level)
                .unwrap_or(0.0)
                .max(min_length);
            if let Some(end) = domain_end {
                base = base.min(end * (1.0 - 1e-6));
            }
            for _ in 0..EMPTINESS_RETRIES {
                let beyond = level_length(base, 1, domain_end);
                if beyond <= base {
                    break;
                }
                let n = interior_points(beyond - base, h0);
                let shifted = (beyond - base) / (n as f64 + 1.0);
                let plus = discretize_with_step(|t| problem.q_plus(t), base, shifted, n)?;
                let minus = discretize_with_step(|t| problem.q_minus(t), base, shifted, n)?;
                if plus.inertia_below(level) == 0 && minus.inertia_below(level) == 0 {
                    break;
                }
                base = beyond;
            }
            Ok(base)
        })
        .collect::<Result<_>>()?;

    let mut grid_levels = Vec::new();
    let mut previous: Option<u64> = None;
    for k in 0..=tol.max_refinements {
        let h = h0 / f64::powi(2.0, k as i32);
        let per_mode: Vec<u64> = magnitudes
            .par_iter()
            .zip(bases.par_iter())
            .map(|(m, &base)| -> Result<u64> {
                let problem = mode_problem(spec, m.value);
                let length = level_length(base, k, domain_end);
                let n = interior_points(length, h);
                let (plus, minus) = count_profile(&problem, h, n, &[level])?[0];
                Ok(m.plus * plus + m.minus * minus)
            })
            .collect::<Result<_>>()?;
        let count: u64 = per_mode.iter().sum();
        grid_levels.push(GridLevel { step: h, count });
        if let Some(prev) = previous {
            let drift = relative_drift(prev, count);
            if drift < tol.convergence {
                let semiclassical = semiclassical_count(spec, &req.model, lambda)?;
                return Ok(CountResult {
                    count,
                    modes_used: modes.len(),
                    semiclassical,
                    grid_levels,
                    wallclock: started.elapsed().as_secs_f64(),
                });
            }
        }
        previous = Some(count);
    }
    let n = grid_levels.len();
    Err(Error::NonConvergent {
        levels: n,
        drift: relative_drift(grid_levels[n - 2].count, grid_levels[n - 1].count),
    })
}

fn relative_drift(previous: u64, current: u64) -> f64 {
    previous.abs_diff(current) as f64 / current.max(1) as f64
}

/// Phase-space count `(1/π) Σ_modes Σ_± ∫ (λ² - q_±)_+^{1/2} dt`.
pub fn semiclassical_count(spec: &CuspModelSpec, model: &BoundaryModel, lambda: f64) -> Result<f64> {
    require_pure_point(spec, model)?;
    require_lambda(lambda)?;
    let level = lambda * lambda;
    let reach = lambda * spec.warp().sup_warp() * (1.0 + CountTolerances::default().domain_safety_margin);
    let tol = Tolerance {
        absolute: 0.0,
        relative: 1e-9,
        max_intervals: 20_000,
    };

    let integral = |problem: &ModeProblem, component: Component| -> f64 {
        match turning_point(problem, Some(component), level) {
            Some(end) if end > 0.0 => {
                quadrature::integrate(
                    |t| (level - problem.q(component, t)).max(0.0).sqrt(),
                    0.0,
                    end,
                    tol,
                )
                .value
            }
            _ => 0.0,
        }
    };

    let mut modes = model.modes_up_to(reach)?;
    // Extend past the nominal reach while magnitudes still see an allowed region.
    let mut edge = reach;
    loop {
        let next = model.next_magnitude_above(edge)?;
        let probe = mode_problem(spec, next);
        if turning_point(&probe, None, level) == Some(0.0) {
            break;
        }
        modes = model.modes_up_to(next)?;
        edge = next;
    }
    let magnitudes = group_magnitudes(&modes, spec.dimension);
    let parts: Vec<f64> = magnitudes
        .par_iter()
        .map(|m| {
            let problem = mode_problem(spec, m.value);
            m.plus as f64 * integral(&problem, Component::Plus)
                + m.minus as f64 * integral(&problem, Component::Minus)
        })
        .collect();
    Ok(parts.iter().sum::<f64>() / PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcSensitivityRequest {
    pub spec: CuspModelSpec,
    pub mu: f64,
    pub lambda_max: f64,
    pub deltas: Vec<f64>,
    pub points_per_wavelength: f64,
}

impl BcSensitivityRequest {
    pub fn new(spec: CuspModelSpec, mu: f64, lambda_max: f64, deltas: Vec<f64>) -> Self {
        Self {
            spec,
            mu,
            lambda_max,
            deltas,
            points_per_wavelength: 400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcSensitivityReport {
    /// Largest change of any eigenvalue of `H_±` below `λ_max²` across the truncations.
    pub drift: f64,
    /// Eigenvalues of `H_+ ⊕ H_-` below `λ_max²`, one list per `δ`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// The same drift for the boundary zero mode, when requested.
    pub control_drift: Option<f64>,
}

/// Sensitivity of the horn-tip spectrum to where the domain `[0, t_max - δ)` is cut.
pub fn bc_sensitivity(req: &BcSensitivityRequest, with_control: bool) -> Result<BcSensitivityReport> {
    req.spec.validate()?;
    require_lambda(req.lambda_max)?;
    if !(req.spec.power > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "boundary-condition sensitivity needs a horn (p > 1), got p = {}",
            req.spec.power
        )));
    }
    if req.mu == 0.0 || !req.mu.is_finite() {
        return Err(Error::InvalidArgument(
            "mu must be a nonzero boundary eigenvalue; use the control for mu = 0".into(),
        ));
    }
    if req.deltas.is_empty() {
        return Err(Error::InvalidArgument("delta list is empty".into()));
    }
    if !(req.points_per_wavelength >= 10.0) {
        return Err(Error::InvalidArgument(format!(
            "points_per_wavelength must be >= 10, got {}",
            req.points_per_wavelength
        )));
    }
    let (drift, eigenvalues) = truncation_drift(req, req.mu)?;
    let control_drift = if with_control {
        Some(truncation_drift(req, 0.0)?.0)
    } else {
        None
    };
    Ok(BcSensitivityReport {
        drift,
        eigenvalues,
        control_drift,
    })
}

fn truncation_drift(req: &BcSensitivityRequest, mu: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let end = req
        .spec
        .warp()
        .domain_end()
        .expect("horns have a finite radial domain");
    let problem = mode_problem(&req.spec, mu);
    let level = req.lambda_max * req.lambda_max;
    let target = 2.0 * PI / (req.lambda_max.max(1.0) * req.points_per_wavelength);
    let spectra: Vec<Vec<f64>> = req
        .deltas
        .par_iter()
        .map(|&delta| -> Result<Vec<f64>> {
            if !(delta > 0.0 && delta < end) {
                return Err(Error::InvalidArgument(format!(
                    "delta must lie in (0, {end}), got {delta}"
                )));
            }
            let length = end - delta;
            let n = interior_points(length, target);
            let h = length / (n as f64 + 1.0);
            let mut eigs = mode_matrix(&problem, Component::Plus, h, n)?.eigenvalues_below(level)?;
            eigs.extend(mode_matrix(&problem, Component::Minus, h, n)?.eigenvalues_below(level)?);
            eigs.sort_by(f64::total_cmp);
            Ok(eigs)
        })
        .collect::<Result<_>>()?;
    let mut drift = 0.0f64;
    for (i, a) in spectra.iter().enumerate() {
        for b in &spectra[i + 1..] {
            let common = a.len().min(b.len());
            for j in 0..common {
                drift = drift.max((a[j] - b[j]).abs());
            }
            // An eigenvalue present for one truncation only moved at least to the threshold.
            for e in a[common..].iter().chain(&b[common..]) {
                drift = drift.max(level - e);
            }
        }
    }
    Ok((drift, spectra))
}

#[derive(Debug, Clone)]
pub struct EssentialScanRequest {
    pub spec: CuspModelSpec,
    pub model: BoundaryModel,
    /// Dirac-scale window `[a, b]`; eigenvalues of `H_±` are counted in `[a², b²)`.
    pub window: (f64, f64),
    pub lengths: Vec<f64>,
    pub points_per_wavelength: f64,
}

impl EssentialScanRequest {
    pub fn new(spec: CuspModelSpec, model: BoundaryModel, window: (f64, f64), lengths: Vec<f64>) -> Self {
        Self {
            spec,
            model,
            window,
            lengths,
            points_per_wavelength: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCount {
    pub length: f64,
    pub count: u64,
}

/// Window counts on truncated domains `[0, T]` sharing one grid step.
///
/// A cylindrical end (`p = 0`) shows counts growing linearly in `T`; any
/// `p > 0` gives counts that freeze once `T` passes the turning points.
pub fn essential_spectrum_scan(req: &EssentialScanRequest) -> Result<Vec<WindowCount>> {
    req.spec.validate()?;
    let p = req.spec.power;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "essential spectrum scan covers 0 <= p < 1, got p = {p}"
        )));
    }
    let (a, b) = req.window;
    if !(a >= 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "window must satisfy 0 <= a < b, got [{a}, {b}]"
        )));
    }
    if req.lengths.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("domain lengths must be positive".into()));
    }
    if !(req.points_per_wavelength >= 10.0) {
        return Err(Error::InvalidArgument(format!(
            "points_per_wavelength must be >= 10, got {}",
            req.points_per_wavelength
        )));
    }
    let h = 2.0 * PI / (b.max(1.0) * req.points_per_wavelength);
    let modes = req.model.modes_up_to(b)?;
    let magnitudes = group_magnitudes(&modes, req.spec.dimension);
    let shifts = [a * a, b * b];
    req.lengths
        .iter()
        .map(|&length| -> Result<WindowCount> {
            let n = interior_points(length, h);
            let per_mode: Vec<u64> = magnitudes
                .par_iter()
                .map(|m| -> Result<u64> {
                    let problem = mode_problem(&req.spec, m.value);
                    let counts = count_profile(&problem, h, n, &shifts)?;
                    let plus = counts[1].0 - counts[0].0;
                    let minus = counts[1].1 - counts[0].1;
                    Ok(m.plus * plus + m.minus * minus)
                })
                .collect::<Result<_>>()?;
            Ok(WindowCount {
                length,
                count: per_mode.iter().sum(),
            })
        })
        .collect()
}
