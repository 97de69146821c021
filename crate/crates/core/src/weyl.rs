//! Predicted eigenvalue asymptotics `N(λ) ~ C λ^a (log λ)^k` and fits of counting data.
//!
//! With `n = dim X`, the exponent in the warp `x^{2p}` selects one of three regimes:
//!
//! - `p > 1/n`: `(a, k) = (n, 0)`, constant from the total volume.
//! - `p = 1/n`: `(a, k) = (n, 1)`, constant from the boundary volume.
//! - `0 < p < 1/n`: `(a, k) = (1/p, 0)`, constant from `ζ(D^h, 1/p - 1)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::boundary::{spectral_gap, zeta_boundary, zeta_partial_sum, BoundaryModel};
use crate::radial::CuspModelSpec;
use crate::{Error, Result};

/// `|p·n - 1|` below this counts as the critical exponent.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Zeta accuracy used by [`predict`], relative to the first spectrum term.
const ZETA_RELATIVE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    VolumeDominated,
    Critical,
    CuspDominated,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::VolumeDominated => "VolumeDominated",
            Regime::Critical => "Critical",
            Regime::CuspDominated => "CuspDominated",
        })
    }
}

/// Selects the regime from `(n, p)`; `p` must be positive.
pub fn regime(dimension: usize, power: f64) -> Regime {
    let pn = power * dimension as f64;
    if (pn - 1.0).abs() <= CRITICAL_TOLERANCE {
        Regime::Critical
    } else if pn > 1.0 {
        Regime::VolumeDominated
    } else {
        Regime::CuspDominated
    }
}

/// Factors entering a predicted constant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ingredients {
    /// `Vol(X, g_p)`, volume regime only.
    pub total_volume: Option<f64>,
    /// `Vol(M, h)`, volume and critical regimes.
    pub boundary_volume: Option<f64>,
    /// `ζ(D^h, 1/p - 1)`, cusp regime only.
    pub zeta: Option<f64>,
    /// `Γ((1-p)/(2p)) / Γ(1/(2p))`, cusp regime only.
    pub gamma_ratio: Option<f64>,
    /// `Vol(S^{n-1})`.
    pub sphere_volume: f64,
    /// Spinor rank `2^{⌊n/2⌋}`.
    pub spinor_rank: f64,
    /// 1 for odd `n`, 2 for even `n`.
    pub epsilon: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylPrediction {
    pub regime: Regime,
    pub exponent: f64,
    pub log_power: u32,
    pub constant: f64,
    pub ingredients: Ingredients,
}

/// First pole of `s ↦ Tr |D|^{-s}`: location, order and leading Laurent coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub location: f64,
    pub order: u32,
    pub coefficient: f64,
}

/// `Vol(S^{m-1}) = 2 π^{m/2} / Γ(m/2)`.
pub fn sphere_volume(m: usize) -> f64 {
    2.0 * PI.powf(m as f64 / 2.0) / gamma(m as f64 / 2.0)
}

fn spinor_rank(n: usize) -> f64 {
    f64::powi(2.0, (n / 2) as i32)
}

fn epsilon(n: usize) -> u32 {
    if n % 2 == 0 {
        2
    } else {
        1
    }
}

fn check_inputs(spec: &CuspModelSpec, model: &BoundaryModel) -> Result<()> {
    spec.validate()?;
    if !(spec.power > 0.0) {
        return Err(Error::NotPurePoint {
            reason: format!("pure point spectrum requires p > 0, got p = {}", spec.power),
        });
    }
    if model.dimension() + 1 != spec.dimension {
        return Err(Error::InvalidModel(format!(
            "boundary of dimension {} does not bound a manifold of dimension {}",
            model.dimension(),
            spec.dimension
        )));
    }
    Ok(())
}

/// `Vol(X, g_p) = Vol(M, h) ∫_0^{x0} x^{np-2} dx`, finite iff `p > 1/n`.
pub fn total_volume(spec: &CuspModelSpec, boundary_volume: f64) -> Result<f64> {
    let exponent = spec.power * spec.dimension as f64 - 1.0;
    if !(exponent > CRITICAL_TOLERANCE) {
        return Err(Error::InfiniteVolume {
            p: spec.power,
            critical: 1.0 / spec.dimension as f64,
        });
    }
    Ok(boundary_volume * spec.cutoff.powf(exponent) / exponent)
}

fn cusp_zeta(model: &BoundaryModel, s: f64) -> Result<f64> {
    if !spectral_gap(model).invertible {
        return Err(Error::NonInvertibleBoundary);
    }
    let first = zeta_partial_sum(model, s, 1);
    zeta_boundary(model, s, ZETA_RELATIVE_EPS * first.max(f64::MIN_POSITIVE))
}

fn ingredients(spec: &CuspModelSpec, model: &BoundaryModel, regime: Regime) -> Result<Ingredients> {
    let n = spec.dimension;
    let p = spec.power;
    let mut out = Ingredients {
        sphere_volume: sphere_volume(n),
        spinor_rank: spinor_rank(n),
        epsilon: epsilon(n),
        ..Ingredients::default()
    };
    match regime {
        Regime::VolumeDominated => {
            let vol = model.volume().ok_or(Error::MissingBoundaryVolume)?;
            out.boundary_volume = Some(vol);
            out.total_volume = Some(total_volume(spec, vol)?);
        }
        Regime::Critical => {
            out.boundary_volume = Some(model.volume().ok_or(Error::MissingBoundaryVolume)?);
        }
        Regime::CuspDominated => {
            out.zeta = Some(cusp_zeta(model, 1.0 / p - 1.0)?);
            out.gamma_ratio = Some(gamma((1.0 - p) / (2.0 * p)) / gamma(1.0 / (2.0 * p)));
        }
    }
    Ok(out)
}

pub fn predict(spec: &CuspModelSpec, model: &BoundaryModel) -> Result<WeylPrediction> {
    check_inputs(spec, model)?;
    let n = spec.dimension;
    let nf = n as f64;
    let regime = regime(n, spec.power);
    let ing = ingredients(spec, model, regime)?;
    let phase = (2.0 * PI).powi(n as i32);
    let (exponent, log_power, constant) = match regime {
        Regime::VolumeDominated => (
            nf,
            0,
            ing.total_volume.unwrap() * ing.sphere_volume * ing.spinor_rank / (nf * phase),
        ),
        Regime::Critical => (
            nf,
            1,
            ing.boundary_volume.unwrap() * ing.sphere_volume * ing.spinor_rank / phase,
        ),
        Regime::CuspDominated => (
            1.0 / spec.power,
            0,
            ing.gamma_ratio.unwrap() * ing.zeta.unwrap() * f64::from(ing.epsilon) / (2.0 * PI.sqrt()),
        ),
    };
    Ok(WeylPrediction {
        regime,
        exponent,
        log_power,
        constant,
        ingredients: ing,
    })
}

/// Leading pole of the Dirac zeta function in closed form.
///
/// Volume regime: simple pole at `n` with residue `Vol(X) Vol(S^{n-1}) 2^{⌊n/2⌋} / (2π)^n`.
/// Critical: double pole at `n` with coefficient `n Vol(M) Vol(S^{n-1}) 2^{⌊n/2⌋} / (2π)^n`.
/// Cusp: simple pole at `1/p` with residue `ε_n Γ((1-p)/(2p)) ζ(D^h, 1/p-1) / (2 p √π Γ(1/(2p)))`.
pub fn leading_pole(spec: &CuspModelSpec, model: &BoundaryModel) -> Result<PoleData> {
    check_inputs(spec, model)?;
    let n = spec.dimension;
    let nf = n as f64;
    let p = spec.power;
    let regime = regime(n, p);
    let ing = ingredients(spec, model, regime)?;
    let symbol = ing.sphere_volume * ing.spinor_rank / (2.0 * PI).powi(n as i32);
    Ok(match regime {
        Regime::VolumeDominated => PoleData {
            location: nf,
            order: 1,
            coefficient: ing.total_volume.unwrap() * symbol,
        },
        Regime::Critical => PoleData {
            location: nf,
            order: 2,
            coefficient: nf * ing.boundary_volume.unwrap() * symbol,
        },
        Regime::CuspDominated => {
            // Normal-operator trace: Σ_μ ∫ Tr (x^{-1}|N(ξ)|)^{-1/p} dξ reduces to a Beta integral per mode.
            let beta = gamma(0.5) * gamma((1.0 - p) / (2.0 * p)) / gamma(1.0 / (2.0 * p));
            PoleData {
                location: 1.0 / p,
                order: 1,
                coefficient: f64::from(ing.epsilon) * ing.zeta.unwrap() * beta / (2.0 * PI * p),
            }
        }
    })
}

/// Tauberian passage from a pole of order `k` at `a` with leading coefficient
/// `C` to `N(λ) ~ C / (a (k-1)!) λ^a (log λ)^{k-1}`.
pub fn delange_coefficient(pole_coefficient: f64, a: f64, k: u32) -> f64 {
    let factorial: f64 = (1..k).map(f64::from).product();
    pole_coefficient / (a * factorial)
}

/// Log-power hypothesis for [`fit_asymptotics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogPower {
    #[default]
    Zero,
    One,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub log_power: LogPower,
    /// Fit `C` alone with the exponent held at this value.
    pub frozen_exponent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub a_fit: f64,
    pub c_fit: f64,
    pub k_fit: u32,
    /// RMS of `log N - log(C λ^a (log λ)^k)` over the samples.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

fn check_window(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 6 {
        return Err(Error::DegenerateWindow(format!(
            "need at least 6 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|&(l, _)| !(l.is_finite() && l > 0.0)) {
        return Err(Error::DegenerateWindow("lambda samples must be positive".into()));
    }
    if samples.iter().any(|&(_, c)| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::NonPositiveCounts);
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return Err(Error::DegenerateWindow(format!(
            "window [{lo}, {hi}] spans less than a factor 4"
        )));
    }
    Ok((lo, hi))
}

fn fit_fixed_k(samples: &[(f64, f64)], k: u32, frozen: Option<f64>, window: (f64, f64)) -> Result<FitResult> {
    if k > 0 && window.0 <= 1.0 {
        return Err(Error::DegenerateWindow(
            "a log-power fit needs lambda > 1".into(),
        ));
    }
    let kf = f64::from(k);
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(l, c)| {
            let x = l.ln();
            let y = c.ln() - if k > 0 { kf * x.ln() } else { 0.0 };
            (x, y)
        })
        .collect();
    let m = points.len() as f64;
    let (a, log_c) = match frozen {
        Some(a) => {
            let mean = points.iter().map(|&(x, y)| y - a * x).sum::<f64>() / m;
            (a, mean)
        }
        None => {
            let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
            let my = points.iter().map(|p| p.1).sum::<f64>() / m;
            let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let a = sxy / sxx;
            (a, my - a * mx)
        }
    };
    let rss: f64 = points.iter().map(|&(x, y)| (y - log_c - a * x).powi(2)).sum();
    Ok(FitResult {
        a_fit: a,
        c_fit: log_c.exp(),
        k_fit: k,
        residual: (rss / m).sqrt(),
        window,
        samples: samples.len(),
    })
}

/// Least-squares fit of `log N` against `log λ`, with the `log log λ` term held at `k`.
pub fn fit_asymptotics(samples: &[(f64, f64)], options: FitOptions) -> Result<FitResult> {
    let window = check_window(samples)?;
    match options.log_power {
        LogPower::Zero => fit_fixed_k(samples, 0, options.frozen_exponent, window),
        LogPower::One => fit_fixed_k(samples, 1, options.frozen_exponent, window),
        LogPower::Free => {
            let zero = fit_fixed_k(samples, 0, options.frozen_exponent, window)?;
            let one = fit_fixed_k(samples, 1, options.frozen_exponent, window)?;
            Ok(if one.residual < zero.residual { one } else { zero })
        }
    }
}

/// Slope and intercept of `N/λ^n` regressed on `log λ`.
pub fn log_slope(samples: &[(f64, f64)], exponent: f64) -> Result<(f64, f64)> {
    check_window(samples)?;
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(l, c)| (l.ln(), c / l.powf(exponent)))
        .collect();
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `count` points spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_lambdas(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { hi } else { lo * (ratio * i as f64).exp() })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::SpinStructure;

    fn circle(r: f64) -> BoundaryModel {
        BoundaryModel::circle(r, SpinStructure::Nontrivial).unwrap()
    }

    fn spec(p: f64) -> CuspModelSpec {
        CuspModelSpec::new(2, p, 1.0).unwrap()
    }

    #[test]
    fn regime_thresholds() {
        assert_eq!(regime(2, 0.5), Regime::Critical);
        assert_eq!(regime(2, 0.5 + 1e-9), Regime::VolumeDominated);
        assert_eq!(regime(2, 0.5 - 1e-9), Regime::CuspDominated);
        assert_eq!(regime(3, 1.0 / 3.0), Regime::Critical);
    }

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(1) - 2.0).abs() < 1e-14);
        assert!((sphere_volume(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn gamma_accuracy() {
        assert!((gamma(0.5) - PI.sqrt()).abs() / PI.sqrt() < 1e-12);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() / PI.sqrt() < 1e-12);
        assert!((gamma(5.0) - 24.0).abs() / 24.0 < 1e-12);
    }

    #[test]
    fn volume_and_critical_constants() {
        let v = predict(&spec(1.0), &circle(1.0)).unwrap();
        assert_eq!((v.regime, v.exponent, v.log_power), (Regime::VolumeDominated, 2.0, 0));
        // Vol(X) = 2π, so C = 2π · 2π · 2 / (2 · 4π²).
        assert!((v.constant - 1.0).abs() < 1e-14);
        let c = predict(&spec(0.5), &circle(1.0)).unwrap();
        assert_eq!((c.regime, c.log_power), (Regime::Critical, 1));
        assert!((c.constant - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cusp_constants() {
        let c = predict(&spec(0.25), &circle(1.0)).unwrap();
        assert_eq!((c.regime, c.exponent), (Regime::CuspDominated, 4.0));
        assert!((c.constant - 8.414398322117159).abs() < 1e-7);
        let c = predict(&spec(1.0 / 3.0), &circle(1.0)).unwrap();
        assert!((c.exponent - 3.0).abs() < 1e-14);
        assert!((c.constant - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn guards() {
        let periodic = BoundaryModel::circle(1.0, SpinStructure::Trivial).unwrap();
        assert_eq!(predict(&spec(0.25), &periodic), Err(Error::NonInvertibleBoundary));
        assert!(matches!(total_volume(&spec(0.5), 1.0), Err(Error::InfiniteVolume { .. })));
        assert!(matches!(predict(&spec(0.0), &circle(1.0)), Err(Error::NotPurePoint { .. })));
        let wrong = CuspModelSpec::new(3, 1.0, 1.0).unwrap();
        assert!(matches!(predict(&wrong, &circle(1.0)), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn delange_examples() {
        assert_eq!(delange_coefficient(4.0, 2.0, 1), 2.0);
        assert_eq!(delange_coefficient(6.0, 3.0, 2), 2.0);
    }

    #[test]
    fn poles_compose_to_constants() {
        for p in [1.0, 0.75, 0.5, 1.0 / 3.0, 0.25] {
            let pred = predict(&spec(p), &circle(1.0)).unwrap();
            let pole = leading_pole(&spec(p), &circle(1.0)).unwrap();
            assert_eq!(pole.location, pred.exponent);
            assert_eq!(pole.order, pred.log_power + 1);
            let c = delange_coefficient(pole.coefficient, pole.location, pole.order);
            assert!((c - pred.constant).abs() < 1e-12 * pred.constant, "p = {p}");
        }
    }

    #[test]
    fn exact_power_law_fit() {
        let samples: Vec<(f64, f64)> = [8.0, 11.0, 16.0, 23.0, 32.0, 45.0]
            .iter()
            .map(|&l: &f64| (l, 2.0 * l * l))
            .collect();
        let fit = fit_asymptotics(&samples, FitOptions::default()).unwrap();
        assert!((fit.a_fit - 2.0).abs() < 1e-12);
        assert!((fit.c_fit - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.window, (8.0, 45.0));
    }

    #[test]
    fn free_log_power_picks_one() {
        let samples: Vec<(f64, f64)> = [8.0, 11.0, 16.0, 23.0, 32.0, 45.0]
            .iter()
            .map(|&l: &f64| (l, 2.0 * l * l * l.ln()))
            .collect();
        let opts = FitOptions {
            log_power: LogPower::Free,
            frozen_exponent: None,
        };
        let fit = fit_asymptotics(&samples, opts).unwrap();
        assert_eq!(fit.k_fit, 1);
        assert!((fit.c_fit - 2.0).abs() < 1e-10);
    }

    #[test]
    fn frozen_exponent_recovers_constant() {
        let samples: Vec<(f64, f64)> = geometric_lambdas(8.0, 32.0, 8)
            .into_iter()
            .map(|l| (l, 3.5 * l.powi(4)))
            .collect();
        let opts = FitOptions {
            log_power: LogPower::Zero,
            frozen_exponent: Some(4.0),
        };
        let fit = fit_asymptotics(&samples, opts).unwrap();
        assert_eq!(fit.a_fit, 4.0);
        assert!((fit.c_fit - 3.5).abs() < 1e-12);
    }

    #[test]
    fn window_errors() {
        let short: Vec<(f64, f64)> = (0..5).map(|i| (8.0 * (i + 1) as f64, 1.0)).collect();
        assert!(matches!(fit_asymptotics(&short, FitOptions::default()), Err(Error::DegenerateWindow(_))));
        let narrow: Vec<(f64, f64)> = (0..8).map(|i| (8.0 + i as f64, 1.0)).collect();
        assert!(matches!(fit_asymptotics(&narrow, FitOptions::default()), Err(Error::DegenerateWindow(_))));
        let mut zero: Vec<(f64, f64)> = geometric_lambdas(8.0, 32.0, 8).into_iter().map(|l| (l, l)).collect();
        zero[3].1 = 0.0;
        assert_eq!(fit_asymptotics(&zero, FitOptions::default()), Err(Error::NonPositiveCounts));
    }

    #[test]
    fn critical_slope_of_exact_law() {
        let samples: Vec<(f64, f64)> = geometric_lambdas(12.0, 96.0, 10)
            .into_iter()
            .map(|l| (l, 2.0 * l * l * l.ln() + 0.7 * l * l))
            .collect();
        let (slope, intercept) = log_slope(&samples, 2.0).unwrap();
        assert!((slope - 2.0).abs() < 1e-10);
        assert!((intercept - 0.7).abs() < 1e-10);
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_lambdas(8.0, 32.0, 8);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 8.0);
        assert_eq!(g[7], 32.0);
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }
}
