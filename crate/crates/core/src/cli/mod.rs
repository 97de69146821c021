//! Batch driver behind the `cusp-weyl` binary.
//!
//! Every subcommand reads one JSON config, writes CSV files into the output
//! directory and prints a short summary. Exit codes: 0 success, 1 invalid
//! config or IO failure, 2 non-convergence, 3 violated hypothesis.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{enumerate_modes, zeta_boundary_detailed};
use crate::counting::{
    bc_sensitivity, count_states, essential_spectrum_scan, BcSensitivityRequest, CountRequest,
    EssentialScanRequest,
};
use crate::ellipticity::{default_xi_grid, scan_invertibility, NormalFamilySpec, DEFAULT_THRESHOLD};
use crate::weyl::{fit_asymptotics, geometric_lambdas, log_slope, predict, FitOptions, LogPower, Regime};
use crate::Error;

use config::{resolve, BoundaryConfig, ExperimentConfig, ModelConfig};
use output::{export_csv, read_counts, write_report, write_table, CountRow, ReportRow};

pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NONCONVERGENT: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cusp-weyl", version, about = "Dirac eigenvalue counting on model cusp manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for noise injection in `fit`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Boundary Dirac eigenvalues up to `modes.mu_max`.
    Modes,
    /// Boundary zeta values.
    Zeta,
    /// Counting function at each configured λ.
    Count,
    /// Window counts on growing truncations.
    ScanEssential,
    /// Horn-tip boundary-condition sensitivity.
    BcSensitivity,
    /// Predicted regime, exponent and constant.
    Predict,
    /// Fit of a count table.
    Fit,
    /// Normal-family invertibility scan.
    Ellipticity,
    /// Predicted versus fitted constants.
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::invalid(format!("{}: {err}", path.display()))
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergent { .. } | Error::NonConvergentTruncation { .. } | Error::TruncationBudget { .. } => {
            EXIT_NONCONVERGENT
        }
        Error::NotPurePoint { .. }
        | Error::ZeroModeUnsafe { .. }
        | Error::NonInvertibleBoundary
        | Error::DivergentRegion { .. }
        | Error::InfiniteVolume { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_INVALID,
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        Self {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

struct Context {
    config: ExperimentConfig,
    config_dir: Option<PathBuf>,
    out: PathBuf,
    seed: u64,
}

impl Context {
    fn model(&self) -> CliResult<ModelConfig> {
        self.config
            .model
            .ok_or_else(|| CliError::invalid("config has no `model` section"))
    }

    fn boundary(&self) -> CliResult<BoundaryConfig> {
        self.config
            .boundary
            .ok_or_else(|| CliError::invalid("config has no `boundary` section"))
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| CliError::invalid(format!("config has no `{name}` section")))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn input(&self, path: &Path) -> PathBuf {
        resolve(self.config_dir.as_deref(), path)
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let (config, config_dir) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let config = ExperimentConfig::from_json(&text)
                .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
            (config, path.parent().map(Path::to_path_buf))
        }
        None => (ExperimentConfig::default(), None),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(|p| resolve(config_dir.as_deref(), p)))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let jobs = cli.jobs.or(config.jobs);
    if jobs == Some(0) {
        return Err(CliError::invalid("--jobs must be at least 1"));
    }
    let ctx = Context {
        config,
        config_dir,
        out,
        seed: cli.seed.unwrap_or(0),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &ctx))
}

fn dispatch(command: Command, ctx: &Context) -> CliResult<()> {
    match command {
        Command::Modes => run_modes(ctx),
        Command::Zeta => run_zeta(ctx),
        Command::Count => run_count(ctx),
        Command::ScanEssential => run_scan(ctx),
        Command::BcSensitivity => run_bc(ctx),
        Command::Predict => run_predict(ctx),
        Command::Fit => run_fit(ctx),
        Command::Ellipticity => run_ellipticity(ctx),
        Command::Report => run_report(ctx),
    }
}

fn write(ctx: &Context, name: &str, header: &str, rows: &[Vec<String>]) -> CliResult<PathBuf> {
    let path = ctx.path(name);
    write_table(&path, header, rows).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn run_modes(ctx: &Context) -> CliResult<()> {
    let section = ctx.section(&ctx.config.modes, "modes")?;
    let model = ctx.boundary()?.model()?;
    let modes = enumerate_modes(&model, section.mu_max)?;
    let rows: Vec<Vec<String>> = modes
        .iter()
        .map(|m| vec![m.value.to_string(), m.multiplicity.to_string()])
        .collect();
    let path = write(ctx, "modes.csv", "value,multiplicity", &rows)?;
    println!("{} modes with |mu| <= {} -> {}", modes.len(), section.mu_max, path.display());
    Ok(())
}

fn run_zeta(ctx: &Context) -> CliResult<()> {
    let section = ctx.section(&ctx.config.zeta, "zeta")?;
    let model = ctx.boundary()?.model()?;
    let mut rows = Vec::new();
    for &s in &section.s {
        let z = zeta_boundary_detailed(&model, s, section.eps)?;
        println!("zeta({s}) = {}", z.value);
        rows.push(vec![
            s.to_string(),
            z.value.to_string(),
            z.terms.to_string(),
            z.tail_lower.to_string(),
            z.tail_upper.to_string(),
        ]);
    }
    write(ctx, "zeta.csv", "s,value,terms,tail_lower,tail_upper", &rows)?;
    Ok(())
}

fn run_count(ctx: &Context) -> CliResult<()> {
    let section = ctx.section(&ctx.config.count, "count")?;
    let spec = ctx.model()?.spec()?;
    let model = ctx.boundary()?.model()?;
    let lambdas = match (&section.lambdas, &section.geometric) {
        (Some(l), None) => l.clone(),
        (None, Some(g)) => geometric_lambdas(g.min, g.max, g.points),
        _ => {
            return Err(CliError::invalid(
                "count needs exactly one of `lambdas` or `geometric`",
            ))
        }
    };
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let req = CountRequest {
            spec,
            model: model.clone(),
            lambda,
            tolerances: ctx.config.tolerances,
        };
        let res = count_states(&req)?;
        println!(
            "lambda = {lambda}: N = {} (semiclassical {:.3}, {} modes, {} levels)",
            res.count,
            res.semiclassical,
            res.modes_used,
            res.grid_levels.len()
        );
        rows.push(CountRow {
            lambda,
            count: res.count,
            semiclassical: res.semiclassical,
            seconds: if section.timing { res.wallclock } else { 0.0 },
        });
    }
    let path = ctx.path("count.csv");
    export_csv(&path, &rows).map_err(|e| CliError::io(&path, e))?;
    Ok(())
}

fn run_scan(ctx: &Context) -> CliResult<()> {
    let section = ctx.section(&ctx.config.scan_essential, "scan_essential")?;
    let mut req = EssentialScanRequest::new(
        ctx.model()?.spec()?,
        ctx.boundary()?.model()?,
        (section.window[0], section.window[1]),
        section.lengths.clone(),
    );
    req.points_per_wavelength = section.points_per_wavelength;
    let counts = essential_spectrum_scan(&req)?;
    let rows: Vec<Vec<String>> = counts
        .iter()
        .map(|c| {
            println!("T = {}: {} levels in window", c.length, c.count);
            vec![c.length.to_string(), c.count.to_string()]
        })
        .collect();
    write(ctx, "scan_essential.csv", "length,count", &rows)?;
    Ok(())
}

fn run_bc(ctx: &Context) -> CliResult<()> {
    let section = ctx.section(&ctx.config.bc_sensitivity, "bc_sensitivity")?;
    let mut req = BcSensitivityRequest::new(
        ctx.model()?.spec()?,
        section.mu,
        section.lambda_max,
        section.deltas.clone(),
    );
    req.points_per_wavelength = section.points_per_wavelength;
    let report = bc_sensitivity(&req, section.control)?;
    let mut rows = vec![vec![section.mu.to_string(), report.drift.to_string()]];
    println!("mu = {}: drift {}", section.mu, report.drift);
    if let Some(d) = report.control_drift {
        println!("mu = 0 control: drift {d}");
        rows.push(vec!["0".into(), d.to_string()]);
    }
    write(ctx, "bc_sensitivity.csv", "mu,drift", &rows)?;
    let eig_rows: Vec<Vec<String>> = section
        .deltas
        .iter()
        .zip(&report.eigenvalues)
        .flat_map(|(d, eigs)| {
            eigs.iter()
                .enumerate()
                .map(move |(i, e)| vec![d.to_string(), i.to_string(), e.to_string()])
        })
        .collect();
    write(ctx, "bc_eigenvalues.csv", "delta,index,eigenvalue", &eig_rows)?;
    Ok(())
}

/// Fixed-point formatting with trailing zeros removed.
fn trim(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn run_predict(ctx: &Context) -> CliResult<()> {
    let spec = ctx.model()?.spec()?;
    let model = ctx.boundary()?.model()?;
    let pred = predict(&spec, &model)?;
    println!(
        "regime={} a={} k={} C={:.6}",
        pred.regime,
        trim(pred.exponent),
        pred.log_power,
        pred.constant
    );
    let row = vec![
        pred.regime.to_string(),
        pred.exponent.to_string(),
        pred.log_power.to_string(),
        pred.constant.to_string(),
    ];
    write(ctx, "predict.csv", "regime,a,k,C", &[row])?;
    Ok(())
}

fn load_counts(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    read_counts(path).map_err(|e| CliError::io(path, e))
}

/// Applies `count · (1 + amplitude·u)`, `u` uniform on `[-1, 1]`.
pub fn inject_noise(samples: &mut [(f64, f64)], amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in samples.iter_mut() {
        let u: f64 = rng.gen_range(-1.0..=1.0);
        s.1 *= 1.0 + amplitude * u;
    }
}

fn run_fit(ctx: &Context) -> CliResult<()> {
    let section = ctx.config.fit.clone().unwrap_or_default();
    let input = match &section.input {
        Some(p) => ctx.input(p),
        None => ctx.path("count.csv"),
    };
    let mut samples = load_counts(&input)?;
    if let Some(amplitude) = section.noise {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(CliError::invalid("noise amplitude must lie in [0, 1)"));
        }
        inject_noise(&mut samples, amplitude, ctx.seed);
    }
    let fit = fit_asymptotics(
        &samples,
        FitOptions {
            log_power: section.log_power,
            frozen_exponent: section.frozen_exponent,
        },
    )?;
    println!(
        "a_fit = {:.6}, C_fit = {:.6}, k = {}, residual = {:.3e}",
        fit.a_fit, fit.c_fit, fit.k_fit, fit.residual
    );
    let row = vec![
        fit.a_fit.to_string(),
        fit.c_fit.to_string(),
        fit.k_fit.to_string(),
        fit.residual.to_string(),
        fit.window.0.to_string(),
        fit.window.1.to_string(),
        fit.samples.to_string(),
    ];
    write(
        ctx,
        "fit.csv",
        "a_fit,C_fit,k_fit,residual,lambda_min,lambda_max,samples",
        &[row],
    )?;
    Ok(())
}

fn run_ellipticity(ctx: &Context) -> CliResult<()> {
    let section = ctx.section(&ctx.config.ellipticity, "ellipticity")?;
    let boundary = ctx.boundary()?;
    let spec = NormalFamilySpec {
        radius: boundary.radius,
        spin: boundary.spin,
        alpha: section.alpha.clone(),
        xi_grid: section
            .xi_grid
            .clone()
            .unwrap_or_else(|| default_xi_grid(boundary.radius, boundary.spin, section.xi_points)),
        truncation: section.truncation,
        threshold: section.threshold.unwrap_or(DEFAULT_THRESHOLD),
    };
    let v = scan_invertibility(&spec)?;
    println!(
        "fully_elliptic = {}, min_sigma = {:.6e} at xi = {}",
        v.fully_elliptic, v.min_sigma, v.worst_xi
    );
    let row = vec![
        v.fully_elliptic.to_string(),
        v.min_sigma.to_string(),
        v.worst_xi.to_string(),
        v.truncation.to_string(),
    ];
    write(ctx, "ellipticity.csv", "fully_elliptic,min_sigma,worst_xi,truncation", &[row])?;
    Ok(())
}

/// Joins a prediction with fits of the matching count table.
pub fn report_row(
    model: &ModelConfig,
    boundary: &BoundaryConfig,
    samples: &[(f64, f64)],
) -> crate::Result<ReportRow> {
    let spec = model.spec()?;
    let pred = predict(&spec, &boundary.model()?)?;
    let log_power = if pred.log_power == 1 { LogPower::One } else { LogPower::Zero };
    let free = fit_asymptotics(
        samples,
        FitOptions {
            log_power,
            frozen_exponent: None,
        },
    )?;
    let c_fit = match pred.regime {
        Regime::Critical => log_slope(samples, pred.exponent)?.0,
        _ => {
            fit_asymptotics(
                samples,
                FitOptions {
                    log_power,
                    frozen_exponent: Some(pred.exponent),
                },
            )?
            .c_fit
        }
    };
    Ok(ReportRow {
        regime: pred.regime.to_string(),
        a_theory: pred.exponent,
        a_fit: free.a_fit,
        c_theory: pred.constant,
        c_fit,
        rel_err: (c_fit - pred.constant).abs() / pred.constant,
    })
}

fn run_report(ctx: &Context) -> CliResult<()> {
    let entries = ctx.config.report.clone().unwrap_or_default().entries;
    let mut rows = Vec::new();
    if entries.is_empty() {
        let samples = load_counts(&ctx.path("count.csv"))?;
        rows.push(report_row(&ctx.model()?, &ctx.boundary()?, &samples)?);
    }
    for entry in &entries {
        let boundary = match entry.boundary {
            Some(b) => b,
            None => ctx.boundary()?,
        };
        let samples = load_counts(&ctx.input(&entry.counts))?;
        rows.push(report_row(&entry.model, &boundary, &samples)?);
    }
    let csv = ctx.path("report.csv");
    write_report(&csv, &ctx.path("report.md"), &rows).map_err(|e| CliError::io(&csv, e))?;
    print!("{}", output::markdown_table(&rows));
    Ok(())
}
