//! Acceptance run: one PASS/FAIL line per criterion with wall time.
//! Exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use sharpnorm::kernels::{
    dominance_scan, g0, g1, kernel_t, t_from_k, PhysicalParams, G0_MELLIN, G1_MELLIN,
};
use sharpnorm::quadrature::{try_integrate_semi_infinite, QuadSpec};
use sharpnorm::schur::{
    closed_form_bound, closed_form_h0_integral, schur_bound, sup_f_analysis, tangent_f, tangent_g,
    weighted_row_integral, SearchSettings, WeightPair,
};
use sharpnorm::spectral::{build_nystrom, extremal_escape_diagnostic, MeshSpec};
use sharpnorm::variational::{rayleigh_scan, stability_suite};
use sharpnorm::{KernelSpec, SHARP_CONSTANT};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn c1_mellin() -> Outcome {
    let spec = QuadSpec::default().with_singular_points(&[1.0]);
    let mut worst = Duration::ZERO;
    let mut errors = Vec::new();
    for (g, exact) in [(g0 as fn(f64) -> _, G0_MELLIN), (g1, G1_MELLIN)] {
        let start = Instant::now();
        let r = try_integrate_semi_infinite(|u| Ok(g(u)? / u), &spec).map_err(|e| e.to_string())?;
        worst = worst.max(start.elapsed());
        errors.push(rel(r.value, exact));
    }
    check(
        errors.iter().all(|&e| e <= 1e-8) && worst < Duration::from_secs(1),
        format!("rel errors {:.1e}, {:.1e}; slowest {worst:.2?}", errors[0], errors[1]),
    )
}

fn c2_residue_oracle() -> Outcome {
    let spec = QuadSpec::default();
    let mut worst = 0.0_f64;
    for &x in &[0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
        let q = weighted_row_integral(g0, |y| y / (y * y + 1.0), x, &spec).map_err(|e| e.to_string())?;
        worst = worst.max(rel(q, PI * x.atan()));
        assert!(rel(closed_form_h0_integral(x), PI * x.atan()) < 1e-15);
        let r = weighted_row_integral(g1, |y| 1.0 / y, x, &spec).map_err(|e| e.to_string())?;
        worst = worst.max(rel(r, 2.0));
    }
    check(worst <= 1e-7, format!("worst rel error {worst:.1e}"))
}

fn c3_schur_upper() -> Outcome {
    let r = schur_bound(&WeightPair::sharp(), &SearchSettings::default(), &QuadSpec::default())
        .map_err(|e| e.to_string())?;
    let below = r.samples.iter().all(|&(x, v)| v < SHARP_CONSTANT && closed_form_bound(x) < SHARP_CONSTANT);
    check(
        (r.sup_value - SHARP_CONSTANT).abs() <= 1e-6 && !r.attained && r.samples.len() >= 400 && below,
        format!(
            "sup {:.10} (C = {SHARP_CONSTANT:.10}), attained {}, {} samples all below C: {below}",
            r.sup_value,
            r.attained,
            r.samples.len()
        ),
    )
}

fn c4_tangent_roots() -> Outcome {
    let r = sup_f_analysis().map_err(|e| e.to_string())?;
    if r.roots.len() != 2 {
        return Err(format!("found {} roots", r.roots.len()));
    }
    let isolated = r
        .roots
        .iter()
        .all(|b| tangent_g(b.root - 1e-12) * tangent_g(b.root + 1e-12) < 0.0);
    let (v1, v2) = (r.roots[0].root, r.roots[1].root);
    let signs = tangent_g(0.5 * v1) < 0.0 && tangent_g(0.5 * (v1 + v2)) > 0.0 && tangent_g(0.5 * (v2 + FRAC_PI_4)) < 0.0;
    let ends = tangent_f(0.0).abs() <= 1e-12 && tangent_f(FRAC_PI_4).abs() <= 1e-12;
    let f_max = (0..=4000)
        .map(|i| tangent_f(FRAC_PI_4 * i as f64 / 4000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    check(
        isolated && signs && ends && f_max <= 1e-10,
        format!("v1 {v1:.12}, v2 {v2:.12}, signs (-,+,-): {signs}, max f {f_max:.1e}"),
    )
}

fn c5_rayleigh_lower() -> Outcome {
    let start = Instant::now();
    let deltas = [10.0, 1e2, 1e3, 1e4, 1e5, 1e6];
    let scan = rayleigh_scan(&KernelSpec::massive_t(), &deltas, &QuadSpec::with_tolerances(1e-9, 1e-14))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let below = scan.points.iter().all(|p| p.1 < SHARP_CONSTANT);
    let deficit = |d: f64| SHARP_CONSTANT - scan.points.iter().find(|p| p.0 == d).unwrap().1;
    let fit = scan.fit.ok_or("no fit")?;
    check(
        below && deficit(1e6) < deficit(1e2) && (fit.limit - SHARP_CONSTANT).abs() <= 0.02 && elapsed.as_secs() < 120,
        format!(
            "Q(1e2) {:.6}, Q(1e6) {:.6}, fit limit {:.5}",
            SHARP_CONSTANT - deficit(1e2),
            SHARP_CONSTANT - deficit(1e6),
            fit.limit
        ),
    )
}

fn nested_domains() -> Result<Vec<(sharpnorm::spectral::NystromDiscretization, sharpnorm::spectral::SpectralResult)>, String> {
    (1..=3)
        .map(|k| {
            let d = build_nystrom(&KernelSpec::massive_t(), 10f64.powi(-k), 10f64.powi(k), &MeshSpec::default())
                .map_err(|e| e.to_string())?;
            let r = d.largest_eigenvalue(1e-12).map_err(|e| e.to_string())?;
            Ok((d, r))
        })
        .collect()
}

fn c6_spectral_sandwich() -> Outcome {
    let runs = nested_domains()?;
    let ls: Vec<f64> = runs.iter().map(|(_, r)| r.lambda_max).collect();
    let increasing = ls.windows(2).all(|w| w[1] > w[0]);
    let below = ls.iter().all(|&l| l < SHARP_CONSTANT - 1e-10);
    let anchored = (ls[2] - 3.308_175_762_6).abs() < 1e-9;
    check(
        increasing && below && ls[2] > 3.2 && anchored,
        format!("lambda_max {:.10}, {:.10}, {:.10}", ls[0], ls[1], ls[2]),
    )
}

fn c7_dominance() -> Outcome {
    let r = dominance_scan(4, 50, 1e-2, 1e2, 1e-12, &PhysicalParams::default()).map_err(|e| e.to_string())?;
    check(
        r.violations.is_empty(),
        format!("{} pairs, {} violations, worst ratio {:.6}", r.pairs_checked, r.violations.len(), r.worst_ratio),
    )
}

fn c8_substitution() -> Outcome {
    let params = PhysicalParams::default();
    let grid: Vec<f64> = (0..40).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 39.0)).collect();
    let mut worst = 0.0_f64;
    for &x in &grid {
        for &y in &grid {
            if x == y {
                continue;
            }
            let t = kernel_t(x, y).map_err(|e| e.to_string())?;
            worst = worst.max(rel(t_from_k(x, y, &params).map_err(|e| e.to_string())?, t));
        }
    }
    check(worst <= 1e-12, format!("worst rel difference {worst:.1e}"))
}

fn c9_stability() -> Outcome {
    let start = Instant::now();
    let suite = stability_suite(
        2024,
        50,
        &[0.3, 0.7, 1.0],
        &PhysicalParams::default(),
        &QuadSpec::with_tolerances(1e-9, 1e-14),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let min = suite
        .iter()
        .flat_map(|(_, rs)| rs.iter().map(|r| r.margin))
        .fold(f64::INFINITY, f64::min);
    let count: usize = suite.iter().map(|(_, rs)| rs.len()).sum();
    check(
        min >= -1e-8 && count == 150 && elapsed.as_secs() < 120,
        format!("{count} checks, min margin {min:.3e}"),
    )
}

fn c10_escape() -> Outcome {
    let runs = nested_domains()?;
    let pairs: Vec<_> = runs.iter().map(|(d, r)| (d, r)).collect();
    let report = extremal_escape_diagnostic(&pairs).map_err(|e| e.to_string())?;
    let medians: Vec<String> = report.medians.iter().map(|m| format!("{:.3}", m.2)).collect();
    check(report.strictly_increasing, format!("mass medians {}", medians.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form Mellin integrals", c1_mellin),
        ("residue-theorem oracle", c2_residue_oracle),
        ("sharp constant, upper side", c3_schur_upper),
        ("tangent-form roots", c4_tangent_roots),
        ("sharp constant, lower side", c5_rayleigh_lower),
        ("spectral sandwich", c6_spectral_sandwich),
        ("partial-wave dominance", c7_dominance),
        ("substitution bridge", c8_substitution),
        ("stability, scalar channel", c9_stability),
        ("no-extremal escape", c10_escape),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{:>2}] {name:<30} {:>9.2?}  {detail}", i + 1, elapsed);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
