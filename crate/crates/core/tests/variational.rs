use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sharpnorm::kernels::{energy, g0, g1, kernel_t, kernel_t0, KernelSpec, PhysicalParams, SHARP_CONSTANT};
use sharpnorm::quadrature::{double_integral_box, DoubleOptions, QuadSpec};
use sharpnorm::schur::ScalarFn;
use sharpnorm::variational::*;
use sharpnorm::Error;

const SYM: DoubleOptions = DoubleOptions {
    diag_singular: true,
    symmetric: true,
};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn f_delta(delta: f64) -> TestFunctionSpec {
    TestFunctionSpec::chi_over_sqrt(delta).unwrap()
}

#[test]
fn massive_quotient_at_delta_100_two_routes() {
    let spec = QuadSpec::with_tolerances(1e-10, 1e-14);
    let q = rayleigh_quotient(&KernelSpec::massive_t(), &f_delta(100.0), &spec).unwrap();
    assert!(q > 0.0 && q < SHARP_CONSTANT);
    // Second route: plain x coordinates.
    let direct = double_integral_box(
        |x, y| kernel_t(x, y).unwrap() / (x * y).sqrt(),
        1.0,
        100.0,
        SYM,
        &spec,
    )
    .unwrap()
    .value
        / 100f64.ln();
    assert!(rel(q, direct) < 1e-8, "{q} vs {direct}");
    assert!((q - 2.998_82).abs() < 1e-5, "{q}");
}

#[test]
fn massless_quotient_reduces_to_homogeneous_integral() {
    let spec = QuadSpec::with_tolerances(1e-10, 1e-14);
    let delta = 50.0;
    let q = rayleigh_quotient(&KernelSpec::massless_t0(), &f_delta(delta), &spec).unwrap();
    let direct = double_integral_box(
        |x, y| kernel_t0(x, y).unwrap() / (x * y).sqrt(),
        1.0,
        delta,
        SYM,
        &spec,
    )
    .unwrap()
    .value
        / delta.ln();
    assert!(rel(q, direct) < 1e-8);
    let reduced = homogeneous_f_delta_quotient(&KernelSpec::massless_t0(), delta, &spec).unwrap();
    assert!(rel(q, reduced) < 1e-8);
}

#[test]
fn quotient_is_scale_invariant() {
    let spec = QuadSpec::default();
    let phi = TestFunctionSpec::custom(Arc::new(|x: f64| (-x).exp() * x), (0.1, 5.0)).unwrap();
    for kernel in [KernelSpec::massive_t(), KernelSpec::massless_t0(), KernelSpec::homogeneous(2).unwrap()] {
        let a = rayleigh_quotient(&kernel, &phi, &spec).unwrap();
        let b = rayleigh_quotient(&kernel, &phi.scaled(5.0), &spec).unwrap();
        assert!(rel(a, b) < 1e-12, "{kernel}: {a} vs {b}");
    }
    let a = rayleigh_quotient(&KernelSpec::massive_t(), &f_delta(20.0), &spec).unwrap();
    let b = rayleigh_quotient(&KernelSpec::massive_t(), &f_delta(20.0).scaled(5.0), &spec).unwrap();
    assert!(rel(a, b) < 1e-9);
}

#[test]
fn zero_function_has_zero_norm() {
    let phi = TestFunctionSpec::custom(Arc::new(|_| 0.0), (1.0, 2.0)).unwrap();
    let r = rayleigh_quotient(&KernelSpec::massive_t(), &phi, &QuadSpec::default());
    assert!(matches!(r, Err(Error::ZeroNorm)));
    assert!(TestFunctionSpec::chi_over_sqrt(1.0).is_err());
    assert!(TestFunctionSpec::custom(Arc::new(|_| 1.0), (2.0, 1.0)).is_err());
}

#[test]
fn massive_scan_increases_toward_sharp_constant() {
    let spec = QuadSpec::with_tolerances(1e-10, 1e-14);
    let scan = rayleigh_scan(&KernelSpec::massive_t(), &[10.0, 1e2, 1e3, 1e4], &spec).unwrap();
    assert!(scan.is_increasing(), "{:?}", scan.points);
    let deficits: Vec<f64> = scan.points.iter().map(|p| SHARP_CONSTANT - p.1).collect();
    assert!(deficits.iter().all(|&d| d > 0.0));
    assert!(deficits.windows(2).all(|w| w[1] < w[0]));
    let fit = scan.fit.unwrap();
    assert!((fit.limit - SHARP_CONSTANT).abs() < 0.05, "{fit:?}");
}

#[test]
fn massless_scan_behaves_alike() {
    let spec = QuadSpec::with_tolerances(1e-10, 1e-14);
    let scan = rayleigh_scan(&KernelSpec::massless_t0(), &[10.0, 1e2, 1e3, 1e4], &spec).unwrap();
    assert!(scan.is_increasing());
    assert!(scan.points.iter().all(|p| p.1 < SHARP_CONSTANT));
    assert!((scan.fit.unwrap().limit - SHARP_CONSTANT).abs() < 0.05);
}

#[test]
fn homogeneous_g0_scan_tends_to_mellin_value() {
    let spec = QuadSpec::with_tolerances(1e-11, 1e-14);
    let k = KernelSpec::homogeneous(0).unwrap();
    let deltas = [1e2, 1e4, 1e8, 1e16, 1e32];
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| (d, homogeneous_f_delta_quotient(&k, d, &spec).unwrap()))
        .collect();
    assert!(points.iter().all(|p| p.1 < PI * PI / 2.0));
    assert!(points.windows(2).all(|w| w[1].1 > w[0].1));
    let fit = fit_deficit(&points).unwrap();
    assert!((fit.limit - PI * PI / 2.0).abs() < 1e-3, "{fit:?}");
}

#[test]
fn homogeneous_one_and_two_dimensional_paths_agree() {
    let spec = QuadSpec::with_tolerances(1e-11, 1e-14);
    let k = KernelSpec::homogeneous(0).unwrap();
    for &delta in &[3.0, 10.0, 100.0, 1e3] {
        let two_d = rayleigh_quotient(&k, &f_delta(delta), &spec).unwrap();
        let one_d = homogeneous_f_delta_quotient(&k, delta, &spec).unwrap();
        let x_coords = double_integral_box(|x, y| g0(y / x).unwrap() / (x * y), 1.0, delta, SYM, &spec)
            .unwrap()
            .value
            / delta.ln();
        assert!((two_d - one_d).abs() < 1e-7, "delta {delta}: {two_d} vs {one_d}");
        assert!((x_coords - one_d).abs() < 1e-7);
    }
    assert!(homogeneous_f_delta_quotient(&KernelSpec::massive_t(), 10.0, &spec).is_err());
}

#[test]
fn sharp_constant_approached_from_below() {
    let spec = QuadSpec::with_tolerances(1e-10, 1e-14);
    let low = rayleigh_quotient(&KernelSpec::massive_t(), &f_delta(1e2), &spec).unwrap();
    let high = rayleigh_quotient(&KernelSpec::massive_t(), &f_delta(1e6), &spec).unwrap();
    assert!(low < high && high < SHARP_CONSTANT, "{low} {high}");
}

#[test]
fn random_trial_functions_stay_below_sharp_constant() {
    let spec = QuadSpec::with_tolerances(1e-9, 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..12 {
        let a = RadialChannelFunction::random_bumps(&mut rng, 1 + trial % 3, 1e-2, 1e2).unwrap();
        let support = a.support;
        let f: ScalarFn = Arc::new(move |x| a.eval(x));
        let phi = TestFunctionSpec::custom(f, support).unwrap();
        for kernel in [KernelSpec::massive_t(), KernelSpec::massless_t0()] {
            let q = rayleigh_quotient(&kernel, &phi, &spec).unwrap();
            assert!(q > 0.0 && q < SHARP_CONSTANT, "trial {trial}, {kernel}: {q}");
        }
    }
}

#[test]
fn dominated_limit_examples() {
    let bound = |u: f64| (g0(u).unwrap() + g1(u).unwrap()) / u;
    let limit = 0.5 * bound(0.5);
    assert!(rel(limit, 1.471_877_649_503_247) < 1e-14);
    // Leading correction is ~1.088/delta (checked at 40 digits), so the
    // 1e-6 match needs delta of order 1e7.
    let dev = dominated_limit_integrand(1e4, 0.5).unwrap() - limit;
    assert!(rel(dev * 1e4, 1.0878) < 1e-3, "{dev}");
    assert!((dominated_limit_integrand(1e7, 0.5).unwrap() - limit).abs() < 1e-6);
    let near = dominated_limit_integrand(10.0, 0.99).unwrap();
    assert!(near.is_finite() && near < bound(0.99));
    for &delta in &[1.5, 10.0, 1e3, 1e6] {
        for i in 1..200 {
            let u = i as f64 / 200.0;
            let v = dominated_limit_integrand(delta, u).unwrap();
            assert!(v <= dominating_bound(u) + 1e-12, "delta {delta} u {u}");
            assert!(rel(dominating_bound(u), bound(u)) < 1e-14);
        }
    }
    assert!(dominated_limit_integrand(1.0, 0.5).is_err());
    assert!(dominated_limit_integrand(10.0, 1.0).is_err());
}

#[test]
fn stability_form_examples() {
    let spec = QuadSpec::with_tolerances(1e-10, 1e-14);
    let params = PhysicalParams::default();
    let zc = params.critical_charge();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bump = RadialChannelFunction::random_bumps(&mut rng, 2, 1e-2, 1e2).unwrap();

    let free = stability_form(&bump, 0.0, &params, &spec).unwrap();
    assert!(free > 0.0);
    assert!(rel(free, bump.kinetic(&params, &spec).unwrap()) < 1e-15);
    assert!(stability_check(&bump, 0.0, &params, &spec).unwrap().margin >= 0.0);

    let f_shaped = RadialChannelFunction::chi_over_sqrt(1.0, 100.0).unwrap();
    assert!(stability_form(&f_shaped, zc, &params, &spec).unwrap() >= 0.0);

    let half = stability_form(&bump, 0.5 * zc, &params, &spec).unwrap();
    assert!(half >= 0.5 * params.rest_energy() * bump.norm_squared(&spec).unwrap());

    let low = RadialChannelFunction::chi_over_sqrt(1e-4, 1e-2).unwrap();
    let report = stability_check(&low, zc, &params, &spec).unwrap();
    assert!(report.margin >= -1e-8, "{report:?}");

    assert!(stability_check(&bump, zc * 1.01, &params, &spec).is_err());
    assert!(stability_form(&bump, -1.0, &params, &spec).is_err());
}

#[test]
fn seeded_stability_suite_has_nonnegative_margins() {
    let spec = QuadSpec::with_tolerances(1e-9, 1e-14);
    let suite = stability_suite(21, 8, &[0.3, 0.7, 1.0], &PhysicalParams::default(), &spec).unwrap();
    assert_eq!(suite.len(), 8);
    for (a, reports) in &suite {
        for r in reports {
            assert!(r.margin >= -1e-8, "{a:?}: {r:?}");
        }
    }
}

#[test]
fn change_of_variables_bridge() {
    let spec = QuadSpec::with_tolerances(1e-11, 1e-14);
    let params = PhysicalParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for bumps in 1..=3 {
        let a = RadialChannelFunction::random_bumps(&mut rng, bumps, 1e-2, 1e2).unwrap();
        let lhs = a.coulomb_form(&params, &spec).unwrap();
        let support = a.support;
        let a2 = a.clone();
        let f: ScalarFn = Arc::new(move |x| energy(x, &params).unwrap().sqrt() * a2.eval(x));
        let phi = TestFunctionSpec::custom(f, support).unwrap();
        let rhs = rayleigh_quotient(&KernelSpec::massive_t(), &phi, &spec).unwrap() * phi.norm_squared(&spec).unwrap();
        assert!(rel(lhs, rhs) < 1e-8, "{bumps} bumps: {lhs} vs {rhs}");
    }
}
