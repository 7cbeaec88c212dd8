//! Command-line front end. Exit codes: 0 success, 2 bad input, 3 numerical
//! failure or failed checks.

use crate::analytic::indicator_report;
use crate::error::Error;
use crate::grid::{FunctionSpec, GridFunction, NormKind};
use crate::kernel::operator_norm_trace;
use crate::measure::{Measure, Piece};
use crate::orbit::{
    growth_exponent, irregular_regimes, iterate_orbit, predicted_growth, shrink_seed, GrowthSpec,
};
use crate::scalar::{fmt_f64, C64};
use crate::verify::run_checks;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "truncon",
    version,
    about = "Truncated convolution operators on [0,1]"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the trace `n,log_norm,trend` of `ln ||T^n f||_p`.
    Orbit {
        #[command(flatten)]
        common: Common,
        /// Exponent `r` in the trend scaling `n^(1/(r+1))`.
        #[arg(long, default_value_t = 1.0)]
        r: f64,
    },
    /// Estimate the growth exponent and compare with the predicted limit.
    Exponent {
        #[command(flatten)]
        common: Common,
        /// Growth law `{"r","b","alpha","s"}` (path or inline JSON).
        #[arg(long)]
        growth: String,
    },
    /// Sample `ln |mu^|` on a ray and estimate the indicator function.
    Fourier {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 300.0)]
        radius: f64,
    },
    /// Write `n,log_norm,rate` for `ln ||(T - mu({0}) I)^n||`.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Write the growing and shrinking regime traces.
    Irregular {
        #[command(flatten)]
        common: Common,
        /// Polynomial density with free term +1 (path or inline JSON).
        #[arg(long = "a-plus")]
        a_plus: Option<String>,
        /// Polynomial density with free term -1 (path or inline JSON).
        #[arg(long = "a-minus")]
        a_minus: Option<String>,
    },
    /// Run every invariant check and report per-check results.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Only run checks whose ID starts with this prefix.
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Measure JSON (path or inline).
    #[arg(long)]
    pub measure: Option<String>,
    /// Function JSON (path or inline).
    #[arg(long)]
    pub f: Option<String>,
    /// Grid size.
    #[arg(long = "N", default_value_t = 1024)]
    pub grid: usize,
    /// Number of iterations.
    #[arg(long = "n", default_value_t = 1000)]
    pub n_max: usize,
    #[arg(long, default_value = "1")]
    pub p: NormKind,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(format!("i/o: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, Deserialize)]
struct GrowthInput {
    r: f64,
    b: f64,
    alpha: f64,
    s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    pub estimate: f64,
    pub prediction: f64,
    pub rel_error: f64,
}

/// Reads JSON from a file, or parses the argument itself when it starts
/// with `{` or `[`.
fn load_json<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::Input(format!("{what} {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed {what} JSON: {e}")))
}

fn load_measure(common: &Common) -> CliResult<Option<Measure>> {
    common
        .measure
        .as_deref()
        .map(|m| {
            let raw: Measure = load_json(m, "measure")?;
            Ok(Measure::new(raw.atoms().to_vec(), raw.pieces().to_vec())?)
        })
        .transpose()
}

fn require_measure(common: &Common) -> CliResult<Measure> {
    load_measure(common)?.ok_or_else(|| CliError::Input("--measure is required".into()))
}

fn load_function(common: &Common, default: FunctionSpec) -> CliResult<GridFunction> {
    let spec = match common.f.as_deref() {
        Some(f) => load_json(f, "function")?,
        None => default,
    };
    Ok(GridFunction::sample(&spec, common.grid)?)
}

fn require_out(common: &Common) -> CliResult<&Path> {
    common
        .out
        .as_deref()
        .ok_or_else(|| CliError::Input("--out is required for this command".into()))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn check_n_max(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::Input("--n must be at least 1".into()));
    }
    Ok(())
}

fn json_line<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Input(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn run_orbit(common: &Common, r: f64) -> CliResult<()> {
    check_n_max(common.n_max)?;
    let t = require_measure(common)?.to_kernel(common.grid)?;
    let f = load_function(common, FunctionSpec::constant(1.0))?;
    let trace = iterate_orbit(&t, &f, common.p, common.n_max)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf, r)?;
    write_output(common.out.as_deref(), &buf)
}

fn run_exponent(common: &Common, growth: &str) -> CliResult<()> {
    check_n_max(common.n_max)?;
    let g: GrowthInput = load_json(growth, "growth")?;
    let spec = GrowthSpec::new(g.r, g.b, g.alpha, g.s)?;
    let measure = match load_measure(common)? {
        Some(m) => m,
        None => Measure::dirac().add(&Measure::new(
            Vec::new(),
            vec![Piece::Power {
                z: C64::new(g.r, 0.0),
                coeff: C64::from_polar(g.b, g.alpha),
            }],
        )?),
    };
    let default_f = if g.s > 0.0 {
        FunctionSpec::constant(1.0).shifted(g.s)
    } else {
        FunctionSpec::constant(1.0)
    };
    let f = load_function(common, default_f)?;
    let trace = iterate_orbit(&measure.to_kernel(common.grid)?, &f, common.p, common.n_max)?;
    let estimate = growth_exponent(&trace, g.r)?.estimate;
    let prediction = predicted_growth(&spec);
    let rel_error = if prediction == 0.0 {
        estimate.abs()
    } else {
        (estimate - prediction).abs() / prediction.abs()
    };
    let report = ExponentReport {
        estimate,
        prediction,
        rel_error,
    };
    write_output(common.out.as_deref(), &json_line(&report)?)
}

fn run_fourier(common: &Common, theta: f64, radius: f64) -> CliResult<()> {
    let out = require_out(common)?;
    let mu = require_measure(common)?;
    let (ray, report) = indicator_report(&mu, theta, radius)?;
    let mut buf = Vec::new();
    ray.write_csv(&mut buf)?;
    fs::write(out, buf)?;
    fs::write(sibling(out, ".indicator.json"), json_line(&report)?)?;
    Ok(())
}

fn run_spectrum(common: &Common) -> CliResult<()> {
    check_n_max(common.n_max)?;
    let mu = require_measure(common)?;
    let t = mu.to_kernel(common.grid)?.sub_identity(mu.atom_at_zero())?;
    let norms = operator_norm_trace(&t, common.n_max)?;
    let mut buf = Vec::new();
    writeln!(buf, "n,log_norm,rate")?;
    for (n, l) in norms.iter().enumerate().skip(1) {
        writeln!(buf, "{n},{},{}", fmt_f64(*l), fmt_f64(l / n as f64))?;
    }
    write_output(common.out.as_deref(), &buf)
}

fn run_irregular(common: &Common, a_plus: Option<&str>, a_minus: Option<&str>) -> CliResult<()> {
    check_n_max(common.n_max)?;
    let out = require_out(common)?;
    let a_plus = match a_plus {
        Some(a) => load_json(a, "a-plus")?,
        None => FunctionSpec::constant(1.0),
    };
    let a_minus = match a_minus {
        Some(a) => load_json(a, "a-minus")?,
        None => FunctionSpec::constant(-1.0),
    };
    let f = match common.f {
        Some(_) => load_function(common, FunctionSpec::constant(1.0))?,
        None => shrink_seed(common.grid, 3)?,
    };
    let regimes = irregular_regimes(&a_plus, &a_minus, &f, common.n_max)?;
    let mut grow = Vec::new();
    regimes.grow.write_csv(&mut grow, 1.0)?;
    let mut shrink = Vec::new();
    regimes.shrink.write_csv(&mut shrink, 1.0)?;
    fs::write(sibling(out, ".grow.csv"), grow)?;
    fs::write(sibling(out, ".shrink.csv"), shrink)?;
    Ok(())
}

fn run_verify(common: &Common, only: Option<&str>) -> CliResult<()> {
    let report = run_checks(common.seed, only)?;
    let mut text = Vec::new();
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(text, "{tag} {} {}: {}", c.id, c.description, c.detail)?;
    }
    let failed = report.failures().count();
    writeln!(text, "{} checks, {failed} failed", report.checks.len())?;
    io::stdout().write_all(&text)?;
    if let Some(out) = common.out.as_deref() {
        fs::write(out, json_line(&report)?)?;
    }
    if failed > 0 {
        let ids: Vec<&str> = report.failures().map(|c| c.id.as_str()).collect();
        return Err(CliError::Numerical(format!(
            "failed checks: {}",
            ids.join(", ")
        )));
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Orbit { common, r } => run_orbit(common, *r),
        Command::Exponent { common, growth } => run_exponent(common, growth),
        Command::Fourier {
            common,
            theta,
            radius,
        } => run_fourier(common, *theta, *radius),
        Command::Spectrum { common } => run_spectrum(common),
        Command::Irregular {
            common,
            a_plus,
            a_minus,
        } => run_irregular(common, a_plus.as_deref(), a_minus.as_deref()),
        Command::Verify { common, only } => run_verify(common, only.as_deref()),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("truncon: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        let p = Path::new("/tmp/out/ray.csv");
        assert_eq!(
            sibling(p, ".indicator.json"),
            Path::new("/tmp/out/ray.indicator.json")
        );
    }

    #[test]
    fn inline_json_is_parsed() {
        let m: Measure = load_json(r#"{"atoms":[{"t":0.5,"w":[1,0]}]}"#, "measure").unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!(matches!(
            load_json::<Measure>("{not json", "measure"),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(
            CliError::from(Error::RefusedFit("x".into())).exit_code(),
            EXIT_NUMERICAL
        );
        assert_eq!(CliError::from(Error::GridSize(7)).exit_code(), EXIT_INPUT);
    }

    #[test]
    fn help_exits_zero_and_garbage_exits_two() {
        assert_eq!(run(["truncon", "--help"]), EXIT_OK);
        assert_eq!(run(["truncon", "bogus"]), EXIT_INPUT);
    }
}
