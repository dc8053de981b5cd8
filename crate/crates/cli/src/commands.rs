use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sharpnorm::kernels::{dominance_scan, g0, g1, Spin, G0_MELLIN, G1_MELLIN};
use sharpnorm::quadrature::{try_integrate_semi_infinite, QuadSpec};
use sharpnorm::schur::{closed_form_bound, schur_bound, sup_f_analysis, weighted_row_integral, SearchSettings, WeightPair};
use sharpnorm::spectral::{build_nystrom, discretization_estimate, extremal_escape_diagnostic, DiagonalTreatment, MeshSpec};
use sharpnorm::variational::{fit_deficit, rayleigh_quotient, stability_suite, TestFunctionSpec};
use sharpnorm::{Error, KernelSpec, Result, SHARP_CONSTANT};

use crate::report::{Cell, Report};
use crate::{config_echo, Globals};

/// Margin below the reference norm that every eigenvalue must clear.
const SPECTRAL_GAP: f64 = 1e-10;

/// Lowest stability margin accepted as rounding.
const MARGIN_FLOOR: f64 = -1e-8;

fn parse_kernel(name: &str) -> std::result::Result<String, String> {
    kernel_spec(name).map(|_| name.to_owned()).map_err(|e| e.to_string())
}

fn kernel_spec(name: &str) -> Result<KernelSpec> {
    match name {
        "t" => Ok(KernelSpec::massive_t()),
        "t0" => Ok(KernelSpec::massless_t0()),
        _ => match name.strip_prefix('g').and_then(|l| l.parse::<usize>().ok()) {
            Some(l) => KernelSpec::homogeneous(l),
            None => Err(Error::InvalidInput(format!("unknown kernel {name:?}; use t, t0 or g<l>"))),
        },
    }
}

fn failure(e: &Error) -> Cell {
    Cell::Missing(e.to_string())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// constants

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    /// Largest relative quadrature-vs-closed-form delta accepted.
    #[arg(long, default_value = "1e-8")]
    pub max_delta: f64,

    /// Points `x` for the row-integral identities.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,10,100")]
    pub xs: Vec<f64>,
}

pub fn constants(g: &Globals, a: &ConstantsArgs) -> Result<Report> {
    let spec = g.quad(1e-10)?;
    let params = g.params()?;
    let mut report = Report::new(
        "constants",
        config_echo(g, a, Some(spec.rel_tol)),
        &["integral", "x", "quadrature", "closed_form", "delta"],
    );
    report.put("sharp_constant", Cell::num(SHARP_CONSTANT));
    report.put("g0_mellin", Cell::num(G0_MELLIN));
    report.put("g1_mellin", Cell::num(G1_MELLIN));
    report.put("critical_charge", Cell::num(params.critical_charge()));

    let mellin = spec.with_singular_points(&[1.0]);
    type Job = (&'static str, Option<f64>, f64);
    let mut jobs: Vec<Job> = vec![("g0(u)/u", None, G0_MELLIN), ("g1(u)/u", None, G1_MELLIN)];
    jobs.extend(a.xs.iter().map(|&x| ("y/(y^2+1) g0(y/x)", Some(x), PI * x.atan())));
    jobs.extend(a.xs.iter().map(|&x| ("g1(y/x)/y", Some(x), 2.0)));

    let values: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(name, x, _)| match (name, x) {
            ("g0(u)/u", _) => try_integrate_semi_infinite(|u| Ok(g0(u)? / u), &mellin).map(|r| r.value),
            ("g1(u)/u", _) => try_integrate_semi_infinite(|u| Ok(g1(u)? / u), &mellin).map(|r| r.value),
            ("g1(y/x)/y", Some(x)) => weighted_row_integral(g1, |y| 1.0 / y, x, &spec),
            (_, Some(x)) => weighted_row_integral(g0, |y| y / (y * y + 1.0), x, &spec),
            _ => unreachable!(),
        })
        .collect();

    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for ((name, x, exact), value) in jobs.iter().zip(values) {
        let x_cell = x.map_or(Cell::text("-"), Cell::num);
        match value {
            Ok(v) => {
                let d = rel(v, *exact);
                worst = worst.max(d);
                report.row(vec![Cell::text(*name), x_cell, Cell::num(v), Cell::num(*exact), Cell::num(d)]);
            }
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                report.row(vec![Cell::text(*name), x_cell, failure(&e), Cell::num(*exact), failure(&e)]);
            }
        }
    }
    report.put("worst_delta", Cell::num(worst));
    report.check(
        "quadrature converged",
        failures.is_empty(),
        if failures.is_empty() { "all integrals converged".to_owned() } else { failures.join("; ") },
    );
    report.check(
        "deltas within tolerance",
        failures.is_empty() && worst <= a.max_delta,
        format!("worst relative delta {worst:.2e} (limit {:.1e})", a.max_delta),
    );
    Ok(report)
}

// schur

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightChoice {
    /// `x/(x^2+1)` and `1/x`, with a closed-form bound function.
    #[value(alias = "paper")]
    Sharp,
    /// `1/x` for both.
    Unweighted,
    /// Tabulated weights from `--weights-table`.
    Table,
}

#[derive(Debug, Args, Serialize)]
pub struct SchurArgs {
    #[arg(long, value_enum, default_value_t = WeightChoice::Sharp)]
    pub weights: WeightChoice,

    /// CSV with header `x,h0,h1`, for `--weights table`.
    #[arg(long)]
    pub weights_table: Option<PathBuf>,

    #[arg(long, default_value_t = 400)]
    pub grid_points: usize,

    #[arg(long, default_value = "1e-4")]
    pub x_min: f64,

    #[arg(long, default_value = "1e4")]
    pub x_max: f64,

    /// Abort once the bound function exceeds this.
    #[arg(long, default_value = "1e6")]
    pub ceiling: f64,

    /// Allowed distance of the sharp-weight supremum from `pi^2/4 + 1`.
    #[arg(long, default_value = "1e-7")]
    pub sup_tol: f64,
}

fn read_weight_table(path: &PathBuf) -> Result<WeightPair> {
    let io_err = |e: &dyn std::fmt::Display| Error::InvalidInput(format!("weights table {}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(&e))?;
    let headers = reader.headers().map_err(|e| io_err(&e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| io_err(&format!("missing column {name}")))
    };
    let (ix, i0, i1) = (col("x")?, col("h0")?, col("h1")?);
    let (mut xs, mut h0, mut h1) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| io_err(&e))?;
        let field = |i: usize| -> Result<f64> {
            let s = record.get(i).unwrap_or("").trim();
            s.parse().map_err(|_| io_err(&format!("bad number {s:?}")))
        };
        xs.push(field(ix)?);
        h0.push(field(i0)?);
        h1.push(field(i1)?);
    }
    WeightPair::from_table(&xs, &h0, &h1)
}

pub fn schur(g: &Globals, a: &SchurArgs) -> Result<Report> {
    let spec = g.quad(1e-10)?;
    let weights = match (a.weights, &a.weights_table) {
        (WeightChoice::Sharp, None) => WeightPair::sharp(),
        (WeightChoice::Unweighted, None) => WeightPair::unweighted(),
        (WeightChoice::Table, Some(path)) => read_weight_table(path)?,
        (WeightChoice::Table, None) => {
            return Err(Error::InvalidInput("--weights table needs --weights-table".into()))
        }
        (_, Some(_)) => {
            return Err(Error::InvalidInput("--weights-table only applies to --weights table".into()))
        }
    };
    let search = SearchSettings {
        grid_points: a.grid_points,
        x_min: a.x_min,
        x_max: a.x_max,
        ceiling: a.ceiling,
        ..SearchSettings::default()
    };
    let mut report = Report::new(
        "schur",
        config_echo(g, a, Some(spec.rel_tol)),
        &["x", "F_closed", "F_quadrature", "delta"],
    );
    let sup = match schur_bound(&weights, &search, &spec) {
        Ok(s) => s,
        Err(e) => {
            report.check("supremum search", false, e.to_string());
            return Ok(report);
        }
    };
    let closed = a.weights == WeightChoice::Sharp;
    for &(x, v) in &sup.samples {
        if closed {
            let c = closed_form_bound(x);
            report.row(vec![Cell::num(x), Cell::num(c), Cell::num(v), Cell::num((v - c).abs())]);
        } else {
            let none = Cell::Missing("no closed form for these weights".into());
            report.row(vec![Cell::num(x), none.clone(), Cell::num(v), none]);
        }
    }
    report.put("sup", Cell::num(sup.sup_value));
    report.put("attained", Cell::Bool(sup.attained));
    report.put("limit", Cell::num(sup.limit_value));
    if let Some(&(x, v)) = sup.arg_candidates.iter().max_by(|p, q| p.1.total_cmp(&q.1)) {
        report.put("interior_max_x", Cell::num(x));
        report.put("interior_max", Cell::num(v));
    }
    match sup_f_analysis() {
        Ok(r) if r.roots.len() == 2 => {
            for (name, b) in ["v1", "v2"].iter().zip(&r.roots) {
                report.put(name, Cell::num(b.root));
                report.put(&format!("{name}_bracket_width"), Cell::num(b.hi - b.lo));
            }
            report.check("tangent-form roots", true, format!("v1 {:.12}, v2 {:.12}", r.roots[0].root, r.roots[1].root));
        }
        Ok(r) => report.check("tangent-form roots", false, format!("found {} roots, expected 2", r.roots.len())),
        Err(e) => report.check("tangent-form roots", false, e.to_string()),
    }
    report.put("bound", Cell::num(sup.sup_value));

    match a.weights {
        WeightChoice::Sharp => {
            let gap = (sup.sup_value - SHARP_CONSTANT).abs();
            report.check(
                "sharp supremum",
                gap <= a.sup_tol && !sup.attained,
                format!("|sup - C| = {gap:.2e}, attained {}", sup.attained),
            );
            let worst = report
                .rows
                .iter()
                .filter_map(|r| match r[3] {
                    Cell::Num(d) => Some(d),
                    _ => None,
                })
                .fold(0.0, f64::max);
            report.check(
                "closed form agrees",
                worst <= 1e-8,
                format!("max |F_quadrature - F_closed| = {worst:.2e}"),
            );
        }
        WeightChoice::Unweighted => report.check(
            "unweighted bound is weaker",
            sup.sup_value.is_finite() && sup.sup_value > SHARP_CONSTANT,
            format!("sup {:.10} vs C = {SHARP_CONSTANT:.10}", sup.sup_value),
        ),
        WeightChoice::Table => report.check(
            "bound is not below the norm",
            sup.sup_value >= SHARP_CONSTANT - 1e-6,
            format!("sup {:.10} vs C = {SHARP_CONSTANT:.10}", sup.sup_value),
        ),
    }
    Ok(report)
}

// rayleigh

#[derive(Debug, Args, Serialize)]
pub struct RayleighArgs {
    /// `t`, `t0` or `g<l>`.
    #[arg(long, default_value = "t", value_parser = parse_kernel)]
    pub kernel: String,

    /// Support ends `delta` of the trial functions, increasing.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000,100000,1000000")]
    pub deltas: Vec<f64>,
}

pub fn rayleigh(g: &Globals, a: &RayleighArgs) -> Result<Report> {
    let spec = g.quad(1e-9)?;
    let kernel = kernel_spec(&a.kernel)?;
    if a.deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("--deltas must be strictly increasing".into()));
    }
    let mut report = Report::new(
        "rayleigh",
        config_echo(g, a, Some(spec.rel_tol)),
        &["delta", "quotient", "deficit"],
    );
    let reference = kernel.reference_norm();
    let values: Vec<Result<f64>> = a
        .deltas
        .par_iter()
        .map(|&d| rayleigh_quotient(&kernel, &TestFunctionSpec::chi_over_sqrt(d)?, &spec))
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (&d, v) in a.deltas.iter().zip(values) {
        match v {
            Ok(q) => {
                points.push((d, q));
                let deficit = reference.map_or(Cell::Missing("no reference norm".into()), |r| Cell::num(r - q));
                report.row(vec![Cell::num(d), Cell::num(q), deficit]);
            }
            Err(e) => {
                failures.push(format!("delta {d}: {e}"));
                report.row(vec![Cell::num(d), failure(&e), failure(&e)]);
            }
        }
    }
    if let Some(r) = reference {
        report.put("reference_norm", Cell::num(r));
    }
    if points.len() >= 2 {
        match fit_deficit(&points) {
            Ok(fit) => {
                report.put("fit_limit", Cell::num(fit.limit));
                report.put("fit_limit_std_error", Cell::num(fit.limit_std_error));
                report.put("fit_rms_residual", Cell::num(fit.rms_residual));
            }
            Err(e) => report.put("fit_limit", failure(&e)),
        }
    }

    report.check(
        "quadrature converged",
        failures.is_empty(),
        if failures.is_empty() { format!("{} quotients", points.len()) } else { failures.join("; ") },
    );
    if let Some(r) = reference {
        let max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        report.check(
            "below the norm",
            points.iter().all(|p| p.1 < r),
            format!("largest quotient {max:.10} vs {r:.10}"),
        );
    }
    report.check(
        "increasing in delta",
        points.windows(2).all(|w| w[1].1 > w[0].1),
        "quotients ordered by delta",
    );
    Ok(report)
}

// nystrom

#[derive(Debug, Args, Serialize)]
pub struct NystromArgs {
    /// `t`, `t0` or `g<l>`.
    #[arg(long, default_value = "t", value_parser = parse_kernel)]
    pub kernel: String,

    /// Domains `[10^-k, 10^k]`.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub decades: Vec<u32>,

    #[arg(long, default_value_t = 3)]
    pub panels_per_decade: usize,

    /// Gauss points per panel.
    #[arg(long, default_value_t = 8)]
    pub order: usize,

    /// End-panel halvings.
    #[arg(long, default_value_t = 6)]
    pub grading: usize,

    /// Zero the diagonal instead of product integration (biased low).
    #[arg(long)]
    pub ignore_diagonal: bool,

    #[arg(long, default_value = "1e-12")]
    pub eig_tol: f64,

    /// Also report the coarse-mesh discretization estimate per domain.
    #[arg(long)]
    pub estimate: bool,

    /// Write the matrix of the largest domain as `i,j,x_i,x_j,entry`.
    #[arg(long)]
    pub matrix_csv: Option<PathBuf>,
}

pub fn nystrom(g: &Globals, a: &NystromArgs) -> Result<Report> {
    let kernel = kernel_spec(&a.kernel)?;
    if a.decades.is_empty() || a.decades.windows(2).any(|w| w[1] <= w[0]) || a.decades[0] == 0 {
        return Err(Error::InvalidInput("--decades must be positive and strictly increasing".into()));
    }
    let mesh = MeshSpec {
        panels_per_decade: a.panels_per_decade,
        order: a.order,
        end_grading: a.grading,
        treatment: if a.ignore_diagonal {
            DiagonalTreatment::IgnoreDiagonal
        } else {
            DiagonalTreatment::ProductIntegration
        },
    };
    mesh.validate()?;
    let columns: &[&'static str] = if a.estimate {
        &["k", "eps", "R", "n", "lambda_max", "residual", "iterations", "symmetry_defect", "estimate"]
    } else {
        &["k", "eps", "R", "n", "lambda_max", "residual", "iterations", "symmetry_defect"]
    };
    let mut report = Report::new("nystrom", config_echo(g, a, None), columns);

    let runs: Vec<Result<_>> = a
        .decades
        .iter()
        .map(|&k| {
            let (eps, r) = (10f64.powi(-(k as i32)), 10f64.powi(k as i32));
            let d = build_nystrom(&kernel, eps, r, &mesh)?;
            let res = d.largest_eigenvalue(a.eig_tol)?;
            let est = if a.estimate {
                Some(discretization_estimate(&kernel, eps, r, &mesh, a.eig_tol))
            } else {
                None
            };
            Ok((k, d, res, est))
        })
        .collect();

    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (run, &k) in runs.into_iter().zip(&a.decades) {
        match run {
            Ok((k, d, res, est)) => {
                let mut row = vec![
                    Cell::Int(k as i64),
                    Cell::num(d.domain.0),
                    Cell::num(d.domain.1),
                    Cell::Int(d.n() as i64),
                    Cell::num(res.lambda_max),
                    Cell::num(res.residual),
                    Cell::Int(res.iterations as i64),
                    Cell::num(d.symmetry_defect()),
                ];
                if let Some(est) = est {
                    row.push(est.map_or_else(|e| failure(&e), Cell::num));
                }
                report.row(row);
                ok.push((d, res));
            }
            Err(e) => {
                failures.push(format!("k = {k}: {e}"));
                let mut row = vec![Cell::Int(k as i64)];
                row.extend((1..columns.len()).map(|_| failure(&e)));
                report.row(row);
            }
        }
    }
    report.check(
        "discretizations built",
        failures.is_empty(),
        if failures.is_empty() { format!("{} domains", ok.len()) } else { failures.join("; ") },
    );
    let lambdas: Vec<f64> = ok.iter().map(|(_, r)| r.lambda_max).collect();
    if let Some(r) = kernel.reference_norm() {
        report.put("reference_norm", Cell::num(r));
        let max = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.check(
            "below the norm",
            lambdas.iter().all(|&l| l < r - SPECTRAL_GAP),
            format!("largest lambda_max {max:.10} vs {r:.10}"),
        );
    }
    report.check(
        "increasing with the domain",
        lambdas.windows(2).all(|w| w[1] > w[0]),
        format!("{} nested domains", lambdas.len()),
    );
    let worst_sym = ok.iter().map(|(d, _)| d.symmetry_defect()).fold(0.0, f64::max);
    let min_entry = ok.iter().map(|(d, _)| d.min_off_diagonal()).fold(f64::INFINITY, f64::min);
    report.put("min_off_diagonal", Cell::num(min_entry));
    report.check("symmetric", worst_sym <= 1e-12, format!("max |M_ij - M_ji| = {worst_sym:.2e}"));
    report.check("nonnegative", min_entry >= 0.0, format!("smallest off-diagonal entry {min_entry:.3e}"));

    if ok.len() >= 3 {
        let pairs: Vec<_> = ok.iter().map(|(d, r)| (d, r)).collect();
        match extremal_escape_diagnostic(&pairs) {
            Ok(esc) => {
                let medians: Vec<String> = esc.medians.iter().map(|m| format!("{:.4}", m.2)).collect();
                for (i, m) in esc.medians.iter().enumerate() {
                    report.put(&format!("mass_median_k{}", a.decades[i]), Cell::num(m.2));
                }
                report.check("mass escapes", esc.strictly_increasing, format!("medians {}", medians.join(", ")));
            }
            Err(e) => report.check("mass escapes", false, e.to_string()),
        }
    }

    if let Some(path) = &a.matrix_csv {
        let (d, _) = ok
            .last()
            .ok_or_else(|| Error::InvalidInput("no discretization to write".into()))?;
        let file = File::create(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        d.write_csv(BufWriter::new(file))
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    }
    Ok(report)
}

// dominance

#[derive(Debug, Args, Serialize)]
pub struct DominanceArgs {
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,

    /// Grid points per axis.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,

    #[arg(long, default_value = "1e-2")]
    pub lo: f64,

    #[arg(long, default_value = "1e2")]
    pub hi: f64,

    /// Relative slack allowed above the dominant kernel.
    #[arg(long, default_value = "1e-12")]
    pub slack: f64,
}

pub fn dominance(g: &Globals, a: &DominanceArgs) -> Result<Report> {
    let params = g.params()?;
    let mut report = Report::new(
        "dominance",
        config_echo(g, a, None),
        &["l", "s", "p_prime", "p", "k_ls", "k_dominant"],
    );
    let r = dominance_scan(a.lmax, a.grid, a.lo, a.hi, a.slack, &params)?;
    for v in &r.violations {
        let s = if v.spin == Spin::Up { "+1/2" } else { "-1/2" };
        report.row(vec![
            Cell::Int(v.l as i64),
            Cell::text(s),
            Cell::num(v.p_prime),
            Cell::num(v.p),
            Cell::num(v.value),
            Cell::num(v.dominant),
        ]);
    }
    report.put("pairs_checked", Cell::Int(r.pairs_checked as i64));
    report.put("worst_ratio", Cell::num(r.worst_ratio));
    report.put("violations", Cell::Int(r.violations.len() as i64));
    report.check(
        "no violations",
        r.violations.is_empty(),
        format!("{} violations in {} pairs", r.violations.len(), r.pairs_checked),
    );
    Ok(report)
}

// stability

#[derive(Debug, Args, Serialize)]
pub struct StabilityArgs {
    /// Charges as fractions of the critical charge.
    #[arg(long = "z-frac", alias = "Z-frac", value_delimiter = ',', default_value = "0.3,0.7,1.0")]
    pub z_frac: Vec<f64>,

    /// Random trial functions.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

pub fn stability(g: &Globals, a: &StabilityArgs) -> Result<Report> {
    let spec: QuadSpec = g.quad(1e-9)?;
    let params = g.params()?;
    let mut report = Report::new(
        "stability",
        config_echo(g, a, Some(spec.rel_tol)),
        &["trial", "z_frac", "charge", "form", "bound", "margin"],
    );
    report.put("critical_charge", Cell::num(params.critical_charge()));
    let suite = match stability_suite(g.seed, a.trials, &a.z_frac, &params, &spec) {
        Ok(s) => s,
        Err(e) => {
            report.check("suite completed", false, e.to_string());
            return Ok(report);
        }
    };
    let mut min = f64::INFINITY;
    for (i, (_, checks)) in suite.iter().enumerate() {
        for (&f, c) in a.z_frac.iter().zip(checks) {
            min = min.min(c.margin);
            report.row(vec![
                Cell::Int(i as i64),
                Cell::num(f),
                Cell::num(c.charge),
                Cell::num(c.form_value),
                Cell::num(c.bound_value),
                Cell::num(c.margin),
            ]);
        }
    }
    report.put("checks", Cell::Int(report.rows.len() as i64));
    report.put("min_margin", Cell::num(min));
    report.check(
        "margins nonnegative",
        min >= MARGIN_FLOOR,
        format!("{} checks, min margin {min:.3e}", report.rows.len()),
    );
    Ok(report)
}

