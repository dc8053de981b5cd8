//! `sharpnorm`: scripted verification runs with human, CSV or JSON output.
//!
//! Every run echoes its configuration, the library version and the wall
//! time, and exits 0 only when all of its checks pass.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sharpnorm::kernels::FINE_STRUCTURE;
use sharpnorm::quadrature::QuadSpec;
use sharpnorm::PhysicalParams;

use commands::{ConstantsArgs, DominanceArgs, NystromArgs, RayleighArgs, SchurArgs, StabilityArgs};
use report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct Globals {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,

    /// Flat `key = value` file of flag defaults; explicit flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,

    /// Relative quadrature tolerance [default: per command].
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,

    /// Absolute quadrature tolerance.
    #[arg(long, global = true, default_value = "1e-14")]
    pub abs_tol: f64,

    /// Fine-structure constant.
    #[arg(long, global = true, default_value_t = FINE_STRUCTURE)]
    pub alpha: f64,

    #[arg(long, global = true, default_value_t = 1.0)]
    pub mass: f64,

    #[arg(long, global = true, default_value_t = 1.0)]
    pub light_speed: f64,

    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "SHARPNORM_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Globals {
    pub fn params(&self) -> sharpnorm::Result<PhysicalParams> {
        PhysicalParams::new(self.mass, self.light_speed, self.alpha, 0.0)
    }

    pub fn quad(&self, default_rel: f64) -> sharpnorm::Result<QuadSpec> {
        let spec = QuadSpec::with_tolerances(self.rel_tol.unwrap_or(default_rel), self.abs_tol);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Parser)]
#[command(name = "sharpnorm", version, about = "Verification runs for the sharp norm pi^2/4 + 1")]
struct Cli {
    #[command(flatten)]
    globals: Globals,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form constants against their quadrature values.
    Constants(ConstantsArgs),
    /// Weighted Schur-test bound and its supremum.
    Schur(SchurArgs),
    /// Rayleigh quotients of `chi_(1,delta)/sqrt(x)`.
    Rayleigh(RayleighArgs),
    /// Largest eigenvalue of the Nystrom matrix on nested domains.
    Nystrom(NystromArgs),
    /// Partial-wave dominance over a log grid.
    Dominance(DominanceArgs),
    /// Randomized stability checks of the scalar channel.
    Stability(StabilityArgs),
}

/// Splices `key = value` lines from `--config` into the argument list,
/// skipping keys already given on the command line.
fn with_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strings.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strings.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_owned)
        }
    });
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let given = |flag: &str| strings.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")));
    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key = value", lineno + 1))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        if matches!(flag.as_str(), "--config" | "--output") {
            return Err(format!("{path}:{}: {flag} cannot be set from a config file", lineno + 1));
        }
        if given(&flag) {
            continue;
        }
        match value.trim() {
            "true" => extra.push(flag),
            "false" => {}
            v => {
                extra.push(flag);
                extra.push(v.to_owned());
            }
        }
    }
    Ok(args.into_iter().chain(extra.into_iter().map(OsString::from)).collect())
}

fn emit(report: &Report, g: &Globals, started_unix: f64, wall: f64) -> io::Result<()> {
    let sink: Box<dyn Write> = match &g.output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    match g.format {
        Format::Human => report.write_human(&mut out, wall)?,
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report.to_json(started_unix, wall))?;
            writeln!(out)?;
        }
    }
    out.flush()
}

trait IgnoreBrokenPipe {
    fn filter_broken_pipe(self) -> io::Result<()>;
}

impl IgnoreBrokenPipe for io::Result<()> {
    fn filter_broken_pipe(self) -> io::Result<()> {
        match self {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            other => other,
        }
    }
}

fn summary_line(report: &Report, output: Option<&Path>) -> String {
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let status = if failed.is_empty() {
        format!("{} checks passed", report.checks.len())
    } else {
        format!("FAILED: {}", failed.join(", "))
    };
    match output {
        Some(p) => format!("sharpnorm {}: {status} (written to {})", report.command, p.display()),
        None => format!("sharpnorm {}: {status}", report.command),
    }
}

fn main() -> ExitCode {
    let args = match with_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    let g = &cli.globals;
    if let Some(n) = g.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let start = Instant::now();
    let result = match &cli.command {
        Command::Constants(a) => commands::constants(g, a),
        Command::Schur(a) => commands::schur(g, a),
        Command::Rayleigh(a) => commands::rayleigh(g, a),
        Command::Nystrom(a) => commands::nystrom(g, a),
        Command::Dominance(a) => commands::dominance(g, a),
        Command::Stability(a) => commands::stability(g, a),
    };
    let wall = start.elapsed().as_secs_f64();
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = emit(&report, g, started_unix, wall).filter_broken_pipe() {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::FAILURE;
    }
    if g.format != Format::Human || g.output.is_some() {
        eprintln!("{}", summary_line(&report, g.output.as_deref()));
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Merges the global settings and the command's own arguments into one
/// flat object for the report. Commands without quadrature pass `None`.
pub fn config_echo<A: Serialize>(g: &Globals, args: &A, rel_tol: Option<f64>) -> Value {
    let mut map = match serde_json::to_value(g) {
        Ok(Value::Object(m)) => m,
        _ => Default::default(),
    };
    match rel_tol {
        Some(r) => {
            map.insert("rel_tol".into(), r.into());
        }
        None => {
            map.remove("rel_tol");
            map.remove("abs_tol");
        }
    }
    if let Ok(Value::Object(m)) = serde_json::to_value(args) {
        map.extend(m);
    }
    Value::Object(map)
}
