//! JSON experiment configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::boundary::{BoundaryModel, SpinStructure};
use crate::counting::CountTolerances;
use crate::ellipticity::FourierSeries;
use crate::radial::CuspModelSpec;
use crate::weyl::LogPower;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output directory; `--out` takes precedence.
    pub output: Option<PathBuf>,
    /// Worker threads; `--jobs` takes precedence.
    pub jobs: Option<usize>,
    #[serde(default)]
    pub tolerances: CountTolerances,
    pub model: Option<ModelConfig>,
    pub boundary: Option<BoundaryConfig>,
    pub modes: Option<ModesConfig>,
    pub zeta: Option<ZetaConfig>,
    pub count: Option<CountConfig>,
    pub scan_essential: Option<ScanConfig>,
    pub bc_sensitivity: Option<BcConfig>,
    pub fit: Option<FitConfig>,
    pub ellipticity: Option<EllipticityConfig>,
    pub report: Option<ReportConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub power: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_dimension() -> usize {
    2
}

fn default_cutoff() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn spec(&self) -> Result<CuspModelSpec> {
        CuspModelSpec::new(self.dimension, self.power, self.cutoff)
    }
}

/// Circle boundaries only; synthetic spectra are a library feature.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub spin: SpinStructure,
}

fn default_radius() -> f64 {
    1.0
}

impl BoundaryConfig {
    pub fn model(&self) -> Result<BoundaryModel> {
        BoundaryModel::circle(self.radius, self.spin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub mu_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    pub s: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    1e-10
}

/// Either explicit `lambdas` or a geometric grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountConfig {
    pub lambdas: Option<Vec<f64>>,
    pub geometric: Option<GeometricGrid>,
    /// Record wall-clock seconds; off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub window: [f64; 2],
    pub lengths: Vec<f64>,
    #[serde(default = "default_scan_ppw")]
    pub points_per_wavelength: f64,
}

fn default_scan_ppw() -> f64 {
    40.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub mu: f64,
    pub lambda_max: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_bc_ppw")]
    pub points_per_wavelength: f64,
    #[serde(default = "default_true")]
    pub control: bool,
}

fn default_bc_ppw() -> f64 {
    400.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Count CSV; defaults to `count.csv` in the output directory.
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub log_power: LogPower,
    pub frozen_exponent: Option<f64>,
    /// Multiplicative noise amplitude applied to the counts, drawn from `--seed`.
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticityConfig {
    #[serde(default)]
    pub alpha: FourierSeries,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    pub xi_grid: Option<Vec<f64>>,
    #[serde(default = "default_xi_points")]
    pub xi_points: usize,
    pub threshold: Option<f64>,
}

fn default_truncation() -> usize {
    16
}

fn default_xi_points() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Rows of the report; empty means the top-level model with `count.csv`.
    #[serde(default)]
    pub entries: Vec<ReportEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEntry {
    pub model: ModelConfig,
    pub boundary: Option<BoundaryConfig>,
    pub counts: PathBuf,
}

/// Resolves `path` against the directory holding the config file.
pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"modle": {"power": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"model": {"power": 1, "x": 2}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"tolerances": {"ppw": 10}}"#).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": {"power": 0.25}, "boundary": {"spin": "nontrivial"},
                "count": {"geometric": {"min": 8, "max": 24, "points": 8}}}"#,
        )
        .unwrap();
        let model = cfg.model.unwrap();
        assert_eq!((model.dimension, model.cutoff), (2, 1.0));
        assert_eq!(cfg.boundary.unwrap().radius, 1.0);
        assert_eq!(cfg.tolerances, CountTolerances::default());
        assert!(!cfg.count.unwrap().timing);
    }
}
