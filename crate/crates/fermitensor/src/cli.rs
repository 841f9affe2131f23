//! Command-line front end: algebra ingestion and inspection, property
//! suites, clustering reports, and mixture decomposition.
//!
//! Exit codes: 0 success, 1 property or validation failure, 2 input
//! contract violation, 3 numerical budget exceeded.

use crate::analysis::{
    check_asymptotic_abelianness, check_strong_clustering, check_weak_clustering, definetti_fit,
    even_state_grid, AnalysisError, MeanConfig,
};
use crate::graded::{AlgebraError, GradedAlgebra, DEFAULT_CLOSURE_TOL};
use crate::json::{AlgebraJson, StateJson};
use crate::nnls::FitError;
use crate::power::{FermiPower, PowerError, PowerState};
use crate::state::State;
use crate::verify::{run_suite, SuiteReport, VerifyConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser)]
#[command(
    name = "fermitensor",
    about = "Graded *-algebras, Fermi tensor products, and symmetric-state analysis",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate, inspect, or emit algebra description files.
    Algebra {
        #[command(subcommand)]
        action: AlgebraAction,
    },
    /// Run seeded property suites.
    Verify {
        /// signs | klein | states | action | clustering | all
        suite: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Decompose a symmetric state into a mixture of even product states.
    Decompose {
        /// State file (values on the power word basis).
        #[arg(long)]
        state: PathBuf,
        /// Number of sites of the power the state lives on.
        #[arg(long)]
        sites: usize,
        /// Grid resolution for the even-state family.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Clustering diagnostics for a symmetric state.
    Cluster {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        sites: usize,
        /// weak | strong | abelian
        #[arg(long)]
        mode: ClusterMode,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Subcommand)]
enum AlgebraAction {
    /// Check every structural invariant of an algebra file.
    Validate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print dimensions and grade counts.
    Info {
        /// Preset name or path to an algebra file.
        name_or_path: String,
    },
    /// Write a preset algebra as a spec file.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClusterMode {
    Weak,
    Strong,
    Abelian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonArgs {
    /// Seed for all randomness.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Residual tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest site count for decay suites.
    #[arg(long, default_value_t = 6)]
    max_sites: usize,
    /// Sample count for group means beyond the exact-enumeration cutoff.
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl CommonArgs {
    fn validate(&self) -> Result<(), String> {
        if let Some(t) = self.tol {
            if t <= 0.0 {
                return Err("tolerance must be positive".into());
            }
        }
        if self.max_sites < 2 {
            return Err("max-sites must be at least 2".into());
        }
        Ok(())
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            code
        }
    }
}

pub struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn contract(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_CONTRACT, message: message.into() }
    }

    fn budget(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_BUDGET, message: message.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::contract(format!("io: {e}"))
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match &e {
            AnalysisError::NotSymmetric(_) | AnalysisError::NotOdd | AnalysisError::EmptyGrid => {
                CliError::contract(e.to_string())
            }
            AnalysisError::Power(PowerError::BudgetExceeded { .. })
            | AnalysisError::Power(PowerError::DenseUnavailable)
            | AnalysisError::Power(PowerError::InsufficientSites { .. }) => {
                CliError::budget(e.to_string())
            }
            AnalysisError::Fit(FitError::NonConvergence) => CliError::budget(e.to_string()),
            _ => CliError::contract(e.to_string()),
        }
    }
}

impl From<PowerError> for CliError {
    fn from(e: PowerError) -> Self {
        match &e {
            PowerError::BudgetExceeded { .. }
            | PowerError::DenseUnavailable
            | PowerError::InsufficientSites { .. } => CliError::budget(e.to_string()),
            _ => CliError::contract(e.to_string()),
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Algebra { action } => run_algebra(action),
        Command::Verify { suite, common } => run_verify(&suite, &common),
        Command::Decompose { state, sites, grid, common } => {
            run_decompose(&state, sites, grid, &common)
        }
        Command::Cluster { state, sites, mode, common } => {
            run_cluster(&state, sites, mode, &common)
        }
    }
}

/// Resolve an algebra by preset name or file path.
pub fn load_algebra(name_or_path: &str, tol: f64) -> Result<GradedAlgebra, CliErrorOrAlgebra> {
    if let Ok(a) = GradedAlgebra::preset(name_or_path) {
        return Ok(a);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliErrorOrAlgebra::Cli(CliError::contract(format!(
            "`{name_or_path}` is neither a preset nor a readable file"
        ))));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliErrorOrAlgebra::Cli(CliError::contract(format!("io: {e}"))))?;
    let spec: AlgebraJson = serde_json::from_str(&text)
        .map_err(|e| CliErrorOrAlgebra::Cli(CliError::contract(format!("malformed algebra file: {e}"))))?;
    GradedAlgebra::from_json(&spec, tol).map_err(CliErrorOrAlgebra::Algebra)
}

pub enum CliErrorOrAlgebra {
    Cli(CliError),
    Algebra(AlgebraError),
}

fn run_algebra(action: AlgebraAction) -> Result<i32, CliError> {
    match action {
        AlgebraAction::Validate { spec, tol } => {
            let tol = tol.unwrap_or(DEFAULT_CLOSURE_TOL);
            if tol <= 0.0 {
                return Err(CliError::contract("tolerance must be positive"));
            }
            match load_algebra(&spec.to_string_lossy(), tol) {
                Ok(a) => {
                    println!(
                        "ok: {} (ambient dim {}, {} basis elements)",
                        a.name(),
                        a.ambient_dim(),
                        a.basis_len()
                    );
                    Ok(EXIT_OK)
                }
                Err(CliErrorOrAlgebra::Cli(e)) => Err(e),
                Err(CliErrorOrAlgebra::Algebra(e)) => {
                    let report = serde_json::json!({
                        "valid": false,
                        "error": error_code(&e),
                        "detail": e.to_string(),
                    });
                    println!("{}", serde_json::to_string_pretty(&report).unwrap());
                    Ok(EXIT_FAILED)
                }
            }
        }
        AlgebraAction::Info { name_or_path } => {
            let a = match load_algebra(&name_or_path, DEFAULT_CLOSURE_TOL) {
                Ok(a) => a,
                Err(CliErrorOrAlgebra::Cli(e)) => return Err(e),
                Err(CliErrorOrAlgebra::Algebra(e)) => {
                    return Err(CliError { code: EXIT_FAILED, message: e.to_string() })
                }
            };
            let (even, odd) = a.count_grades();
            println!("name: {}", a.name());
            println!("ambient dim: {}", a.ambient_dim());
            println!("basis: {} ({} even, {} odd)", a.basis_len(), even, odd);
            Ok(EXIT_OK)
        }
        AlgebraAction::Preset { name, out } => {
            let a = GradedAlgebra::preset(&name)
                .map_err(|e| CliError::contract(e.to_string()))?;
            let path = out.unwrap_or_else(|| {
                PathBuf::from(format!(
                    "{}.json",
                    name.replace(['(', ')'], "_").trim_end_matches('_')
                ))
            });
            let text = serde_json::to_string_pretty(&a.to_json()).unwrap();
            std::fs::write(&path, text + "\n")?;
            println!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
    }
}

fn error_code(e: &AlgebraError) -> &'static str {
    match e {
        AlgebraError::GradingNotInvolutive(_) => "GradingNotInvolutive",
        AlgebraError::NotHomogeneous { .. } => "NotHomogeneous",
        AlgebraError::NotClosed(_) => "NotClosed",
        AlgebraError::NoUnit(_) => "NoUnit",
        AlgebraError::DependentBasis(_) => "DependentBasis",
        AlgebraError::DimensionMismatch(_) => "DimensionMismatch",
        AlgebraError::UnknownPreset(_) => "UnknownPreset",
        AlgebraError::AlgebraMismatch => "AlgebraMismatch",
    }
}

fn run_verify(suite: &str, common: &CommonArgs) -> Result<i32, CliError> {
    common.validate().map_err(CliError::contract)?;
    let cfg = VerifyConfig {
        seed: common.seed,
        tol: common.tol,
        max_sites: common.max_sites,
        samples: common.samples,
    };
    let reports = run_suite(suite, &cfg)
        .ok_or_else(|| CliError::contract(format!("unknown suite `{suite}`")))?;
    let mut all_ok = true;
    for report in &reports {
        for r in &report.results {
            let status = if r.passed { "PASS" } else { "FAIL" };
            println!(
                "[{status}] {}/{} (worst residual {:.3e})",
                report.suite, r.name, r.worst_residual
            );
            all_ok &= r.passed;
        }
    }
    emit_suites(&reports, common)?;
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILED })
}

fn emit_suites(reports: &[SuiteReport], common: &CommonArgs) -> Result<(), CliError> {
    let Some(path) = &common.out else { return Ok(()) };
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(reports).unwrap() + "\n",
        Format::Csv => {
            let mut s = String::from("suite,property,passed,worst_residual,tolerance\n");
            for report in reports {
                for r in &report.results {
                    s.push_str(&format!(
                        "{},{},{},{:e},{:e}\n",
                        report.suite, r.name, r.passed, r.worst_residual, r.tolerance
                    ));
                }
            }
            s
        }
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Load a dense state on the n-fold power of the site algebra named inside
/// the state file.
fn load_power_state(path: &Path, sites: usize) -> Result<(FermiPower, PowerState), CliError> {
    let text = std::fs::read_to_string(path)?;
    let spec: StateJson = serde_json::from_str(&text)
        .map_err(|e| CliError::contract(format!("malformed state file: {e}")))?;
    let site = match load_algebra(&spec.algebra, DEFAULT_CLOSURE_TOL) {
        Ok(a) => a,
        Err(CliErrorOrAlgebra::Cli(e)) => return Err(e),
        Err(CliErrorOrAlgebra::Algebra(e)) => {
            return Err(CliError::contract(format!("algebra in state file invalid: {e}")))
        }
    };
    let power = FermiPower::new(&site, sites)?;
    let dense = power
        .dense()
        .ok_or_else(|| CliError::budget("power too large for a dense state file"))?
        .clone();
    let state = match (&spec.values, &spec.density) {
        (Some(values), None) => {
            let v = crate::json::vector_from_json(values);
            if v.len() != power.word_count() {
                return Err(CliError::contract(format!(
                    "state has {} values, power needs {}",
                    v.len(),
                    power.word_count()
                )));
            }
            State::from_values(&dense, v).map_err(|e| CliError::contract(e.to_string()))?
        }
        (None, Some(rows)) => {
            let rho = crate::json::matrix_from_json(rows)
                .map_err(|e| CliError::contract(format!("bad density: {e}")))?;
            State::from_density(&dense, &rho).map_err(|e| CliError::contract(e.to_string()))?
        }
        _ => {
            return Err(CliError::contract(
                "state file needs exactly one of `values` or `density`",
            ))
        }
    };
    Ok((power.clone(), PowerState::dense(state, &power)))
}

fn run_decompose(
    state_path: &Path,
    sites: usize,
    grid_resolution: usize,
    common: &CommonArgs,
) -> Result<i32, CliError> {
    common.validate().map_err(CliError::contract)?;
    if grid_resolution < 2 {
        return Err(CliError::contract("grid resolution must be at least 2"));
    }
    let (power, omega) = load_power_state(state_path, sites)?;
    let grid = even_state_grid(power.site(), grid_resolution);
    let cfg = MeanConfig { seed: common.seed, samples: common.samples };
    let fit = definetti_fit(&omega, &grid, cfg)?;
    let json = fit.to_json();
    let mut summary: Vec<(usize, f64, f64)> = fit
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-9)
        .map(|(k, &w)| (k, fit.grid_params[k], w))
        .collect();
    summary.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap());
    println!("residual: {:.3e}", fit.residual);
    for (k, param, w) in summary.iter().take(12) {
        println!("  node {k} (param {param:.4}): weight {w:.6}");
    }
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(&json).unwrap() + "\n",
        Format::Csv => {
            let mut s = String::from("node,param,weight\n");
            for (k, (p, w)) in json.grid_params.iter().zip(json.weights.iter()).enumerate() {
                s.push_str(&format!("{k},{p},{w}\n"));
            }
            s
        }
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn run_cluster(
    state_path: &Path,
    sites: usize,
    mode: ClusterMode,
    common: &CommonArgs,
) -> Result<i32, CliError> {
    common.validate().map_err(CliError::contract)?;
    let (power, omega) = load_power_state(state_path, sites)?;
    let site = power.site().clone();
    let cfg = MeanConfig { seed: common.seed, samples: common.samples };
    // Demonstrative operands: the first non-unit even basis element for the
    // two-point functions, an odd pair for the commutator mean.
    let a = site.basis_element(0);
    let report_json = match mode {
        ClusterMode::Weak => check_weak_clustering(&omega, &a, &a, cfg)?.to_json(),
        ClusterMode::Abelian => {
            let odd: Vec<usize> = (0..site.basis_len())
                .filter(|&i| site.grade(i) == crate::graded::Grade::Odd)
                .collect();
            let (b, c) = match odd.as_slice() {
                [first, second, ..] => (
                    site.basis_element(*first).add(&site.basis_element(*second)),
                    site.basis_element(*second),
                ),
                [only] => (site.basis_element(*only), site.identity_element()),
                [] => (a.clone(), site.identity_element()),
            };
            check_asymptotic_abelianness(&omega, &a, &b, &c, &site.identity_element(), cfg)?
                .to_json()
        }
        ClusterMode::Strong => {
            let mut max_m = 0u32;
            while 2usize << (max_m + 1) <= sites {
                max_m += 1;
            }
            let devs = check_strong_clustering(&omega, &a, &a, max_m, cfg)?;
            crate::json::DecayReportJson {
                quantity: "strong-clustering deviation".into(),
                points: devs.iter().map(|&(m, d)| (m as usize, d)).collect(),
                fitted_rate: 0.0,
                passed: true,
            }
        }
    };
    for (n, v) in &report_json.points {
        println!("  {n}: {v:.6e}");
    }
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(&report_json).unwrap() + "\n",
        Format::Csv => {
            let mut s = String::from("n,value\n");
            for (n, v) in &report_json.points {
                s.push_str(&format!("{n},{v}\n"));
            }
            s
        }
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}
