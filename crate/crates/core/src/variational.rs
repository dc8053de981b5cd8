//! Rayleigh quotients, the `f_delta` lower-bound sequence and the
//! single-channel stability form.
//!
//! Quadratic forms are evaluated in logarithmic coordinates `x = e^s`, where
//! a function `phi` becomes `psi(s) = phi(e^s) e^{s/2}` and every kernel
//! becomes [`KernelSpec::eval_log`]. The map is unitary, and `f_delta`
//! becomes the indicator of `[0, ln delta]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{domain, Error, Result};
use crate::kernels::{
    energy_unchecked, g0_unchecked, g1_unchecked, kernel_t, KernelSpec, PartialWaveIndex,
    PhysicalParams,
};
use crate::quadrature::{
    try_integrate_interval, try_offset_double_integral_box, QuadSpec,
};
use crate::schur::ScalarFn;

/// A trial function on `(0, inf)` with compact support.
#[derive(Clone)]
pub enum TestFunctionSpec {
    /// `chi_(1, delta)(x) / sqrt(x)`.
    ChiOverSqrt { delta: f64 },
    /// An arbitrary function supported in `[lo, hi]`, `0 < lo < hi`.
    Custom { f: ScalarFn, support: (f64, f64) },
}

impl fmt::Debug for TestFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ChiOverSqrt { delta } => write!(f, "ChiOverSqrt {{ delta: {delta} }}"),
            Self::Custom { support, .. } => write!(f, "Custom {{ support: {support:?} }}"),
        }
    }
}

impl TestFunctionSpec {
    pub fn chi_over_sqrt(delta: f64) -> Result<Self> {
        if !(delta > 1.0) || !delta.is_finite() {
            return Err(domain("TestFunctionSpec", format!("delta must exceed 1, got {delta}")));
        }
        Ok(Self::ChiOverSqrt { delta })
    }

    pub fn custom(f: ScalarFn, support: (f64, f64)) -> Result<Self> {
        check_support(support)?;
        Ok(Self::Custom { f, support })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::ChiOverSqrt { delta } => (1.0, *delta),
            Self::Custom { support, .. } => *support,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match self {
            Self::ChiOverSqrt { .. } => 1.0 / x.sqrt(),
            Self::Custom { f, .. } => f(x),
        }
    }

    /// The function multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let (f, support) = match self {
            Self::ChiOverSqrt { delta } => {
                let f: ScalarFn = Arc::new(|x: f64| 1.0 / x.sqrt());
                (f, (1.0, *delta))
            }
            Self::Custom { f, support } => (Arc::clone(f), *support),
        };
        Self::Custom {
            f: Arc::new(move |x| c * f(x)),
            support,
        }
    }

    /// `psi(s) = phi(e^s) e^{s/2}`.
    fn log_profile(&self, s: f64) -> f64 {
        match self {
            Self::ChiOverSqrt { .. } => 1.0,
            Self::Custom { f, .. } => {
                let x = s.exp();
                f(x) * (0.5 * s).exp()
            }
        }
    }

    /// `int phi^2`; `ln delta` for `f_delta`.
    pub fn norm_squared(&self, spec: &QuadSpec) -> Result<f64> {
        match self {
            Self::ChiOverSqrt { delta } => Ok(delta.ln()),
            Self::Custom { .. } => {
                let (lo, hi) = self.support();
                let r = try_integrate_interval(
                    |s| Ok(self.log_profile(s).powi(2)),
                    lo.ln(),
                    hi.ln(),
                    spec,
                )?;
                Ok(r.value)
            }
        }
    }
}

fn check_support((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
        return Err(domain("support", format!("need 0 < lo < hi < inf, got [{lo}, {hi}]")));
    }
    Ok(())
}

/// `int int psi(s) K(s, r) psi(r) ds dr` over `[a, b]^2`.
fn log_quadratic_form<P>(kernel: &KernelSpec, psi: P, a: f64, b: f64, spec: &QuadSpec) -> Result<f64>
where
    P: Fn(f64) -> f64,
{
    let integrand = |s: f64, tau: f64| Ok(psi(s) * kernel.eval_log_offset(s, tau) * psi(s + tau));
    Ok(try_offset_double_integral_box(integrand, a, b, spec)?.value)
}

/// `(K phi, phi) / ||phi||^2` with the double integral done in log
/// coordinates and the diagonal treated as an endpoint singularity.
pub fn rayleigh_quotient(kernel: &KernelSpec, phi: &TestFunctionSpec, spec: &QuadSpec) -> Result<f64> {
    let norm = phi.norm_squared(spec)?;
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let (lo, hi) = phi.support();
    let form = log_quadratic_form(kernel, |s| phi.log_profile(s), lo.ln(), hi.ln(), spec)?;
    Ok(form / norm)
}

/// For a kernel depending only on `x/y` (scaled by `1/sqrt(xy)`), the
/// `f_delta` quotient reduces to `2 int_0^L (1 - tau/L) K(tau) dtau` with
/// `L = ln delta`.
pub fn homogeneous_f_delta_quotient(kernel: &KernelSpec, delta: f64, spec: &QuadSpec) -> Result<f64> {
    if !kernel.is_homogeneous() {
        return Err(Error::InvalidInput(format!("kernel {kernel} is not homogeneous")));
    }
    TestFunctionSpec::chi_over_sqrt(delta)?;
    let l = delta.ln();
    let r = try_integrate_interval(
        |tau| Ok(2.0 * (1.0 - tau / l) * kernel.eval_log(0.0, tau)),
        0.0,
        l,
        spec,
    )?;
    Ok(r.value)
}

/// Least-squares fit `Q(delta) = limit - c1/L - c2/L^2`, `L = ln delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeficitFit {
    pub limit: f64,
    pub c1: f64,
    pub c2: f64,
    pub rms_residual: f64,
    /// Standard error of `limit` from the residual variance; infinite when
    /// there are no spare degrees of freedom.
    pub limit_std_error: f64,
}

/// Fits [`DeficitFit`]; with only two points the `c2` term is dropped.
pub fn fit_deficit(points: &[(f64, f64)]) -> Result<DeficitFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("deficit fit needs >= 2 points, got {n}")));
    }
    let cols = if n >= 3 { 3 } else { 2 };
    let a = DMatrix::from_fn(n, cols, |i, j| if j == 0 { 1.0 } else { -points[i].0.ln().powi(-(j as i32)) });
    let b = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InsufficientData(format!("deficit fit failed: {e}")))?;
    let residual = &a * &coeffs - &b;
    let limit_std_error = if n > cols {
        let variance = residual.norm_squared() / (n - cols) as f64;
        let normal_inverse = (a.transpose() * &a)
            .try_inverse()
            .ok_or_else(|| Error::InsufficientData("deficit fit is degenerate".into()))?;
        (variance * normal_inverse[(0, 0)]).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(DeficitFit {
        limit: coeffs[0],
        c1: coeffs[1],
        c2: if cols == 3 { coeffs[2] } else { 0.0 },
        rms_residual: (residual.norm_squared() / n as f64).sqrt(),
        limit_std_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighScan {
    /// `(delta, quotient)`.
    pub points: Vec<(f64, f64)>,
    pub fit: Option<DeficitFit>,
}

impl RayleighScan {
    pub fn is_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 > w[0].1)
    }
}

/// Quotients of `f_delta` for increasing `deltas`, plus a deficit fit when
/// at least two points are available.
pub fn rayleigh_scan(kernel: &KernelSpec, deltas: &[f64], spec: &QuadSpec) -> Result<RayleighScan> {
    if deltas.iter().any(|&d| !(d > 1.0)) || deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("deltas must be increasing and > 1".into()));
    }
    use rayon::prelude::*;
    let points = deltas
        .par_iter()
        .map(|&d| Ok((d, rayleigh_quotient(kernel, &TestFunctionSpec::chi_over_sqrt(d)?, spec)?)))
        .collect::<Result<Vec<_>>>()?;
    let fit = if points.len() >= 2 {
        Some(fit_deficit(&points)?)
    } else {
        None
    };
    Ok(RayleighScan { points, fit })
}

/// `delta t(delta, delta u) / sqrt(u)`; bounded by `(g0(u) + g1(u))/u` and
/// tending to `(g0(u) + g1(u))/(2u)` as `delta -> inf`.
pub fn dominated_limit_integrand(delta: f64, u: f64) -> Result<f64> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(domain("dominated_limit_integrand", format!("delta must exceed 1, got {delta}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("dominated_limit_integrand", format!("u must lie in (0, 1), got {u}")));
    }
    Ok(delta * kernel_t(delta, delta * u)? / u.sqrt())
}

/// `(g0(u) + g1(u))/u`, the dominating function of
/// [`dominated_limit_integrand`].
pub fn dominating_bound(u: f64) -> f64 {
    (g0_unchecked(u) + g1_unchecked(u)) / u
}

/// A radial amplitude `a(p)` in one partial-wave channel.
#[derive(Clone)]
pub struct RadialChannelFunction {
    a: ScalarFn,
    pub support: (f64, f64),
    pub label: String,
}

impl fmt::Debug for RadialChannelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialChannelFunction({}, support {:?})", self.label, self.support)
    }
}

impl RadialChannelFunction {
    pub fn new(a: ScalarFn, support: (f64, f64), label: &str) -> Result<Self> {
        check_support(support)?;
        Ok(Self {
            a,
            support,
            label: label.to_owned(),
        })
    }

    /// `chi_(lo, hi)(p) / sqrt(p)`.
    pub fn chi_over_sqrt(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Arc::new(|p: f64| 1.0 / p.sqrt()), (lo, hi), &format!("chi({lo},{hi})/sqrt(p)"))
    }

    /// Sum of `bumps` cubic B-spline bumps in `ln p`, each with log-uniform
    /// support inside `[lo, hi]` and amplitude in `[0.5, 2]`.
    pub fn random_bumps(rng: &mut impl Rng, bumps: usize, lo: f64, hi: f64) -> Result<Self> {
        check_support((lo, hi))?;
        if bumps == 0 {
            return Err(Error::InvalidInput("need at least one bump".into()));
        }
        let (la, lb) = (lo.ln(), hi.ln());
        let mut parts = Vec::with_capacity(bumps);
        for _ in 0..bumps {
            let mut ends = [rng.random_range(la..lb), rng.random_range(la..lb)];
            ends.sort_by(f64::total_cmp);
            if ends[1] - ends[0] < 0.1 {
                let mid = 0.5 * (ends[0] + ends[1]);
                ends = [(mid - 0.05).max(la), (mid + 0.05).min(lb)];
            }
            let amplitude = rng.random_range(0.5..2.0);
            parts.push((ends[0], ends[1], amplitude));
        }
        let s_lo = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let s_hi = parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let label = format!("{bumps} bumps in [{:.3e}, {:.3e}]", s_lo.exp(), s_hi.exp());
        let a: ScalarFn = Arc::new(move |p: f64| {
            let s = p.ln();
            parts
                .iter()
                .map(|&(a, b, amp)| amp * cubic_bspline(4.0 * (s - a) / (b - a) - 2.0))
                .sum()
        });
        Self::new(a, (s_lo.exp(), s_hi.exp()), &label)
    }

    pub fn eval(&self, p: f64) -> f64 {
        if p < self.support.0 || p > self.support.1 {
            0.0
        } else {
            (self.a)(p)
        }
    }

    fn log_profile(&self, s: f64) -> f64 {
        self.eval(s.exp()) * (0.5 * s).exp()
    }

    fn log_bounds(&self) -> (f64, f64) {
        (self.support.0.ln(), self.support.1.ln())
    }

    /// `int |a|^2 dp`.
    pub fn norm_squared(&self, spec: &QuadSpec) -> Result<f64> {
        let (a, b) = self.log_bounds();
        Ok(try_integrate_interval(|s| Ok(self.log_profile(s).powi(2)), a, b, spec)?.value)
    }

    /// `int e(p) |a|^2 dp`.
    pub fn kinetic(&self, params: &PhysicalParams, spec: &QuadSpec) -> Result<f64> {
        let (a, b) = self.log_bounds();
        let r = try_integrate_interval(
            |s| Ok(energy_unchecked(s.exp(), params) * self.log_profile(s).powi(2)),
            a,
            b,
            spec,
        )?;
        Ok(r.value)
    }

    /// `int int a(p') k_{0,1/2}(p', p) a(p) dp dp'`.
    pub fn coulomb_form(&self, params: &PhysicalParams, spec: &QuadSpec) -> Result<f64> {
        let kernel = KernelSpec::partial_wave(PartialWaveIndex::dominant(), *params)?;
        let (a, b) = self.log_bounds();
        log_quadratic_form(&kernel, |s| self.log_profile(s), a, b, spec)
    }
}

/// Centered cubic B-spline on `[-2, 2]`, peak `2/3` at 0.
fn cubic_bspline(t: f64) -> f64 {
    let a = t.abs();
    if a >= 2.0 {
        0.0
    } else if a >= 1.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    }
}

/// `int e |a|^2 - (alpha c Z / pi) int int a k_{0,1/2} a`.
pub fn stability_form(
    a: &RadialChannelFunction,
    z: f64,
    params: &PhysicalParams,
    spec: &QuadSpec,
) -> Result<f64> {
    check_charge(z)?;
    params.validate()?;
    let kinetic = a.kinetic(params, spec)?;
    let coulomb = a.coulomb_form(params, spec)?;
    Ok(kinetic - params.alpha * params.light_speed * z / PI * coulomb)
}

fn check_charge(z: f64) -> Result<()> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain("stability", format!("charge must be >= 0, got {z}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub charge: f64,
    pub form_value: f64,
    /// `(1 - Z/Z_c) m c^2 int |a|^2`.
    pub bound_value: f64,
    pub margin: f64,
}

/// Compares [`stability_form`] with the lower bound `(1 - Z/Z_c) m c^2 ||a||^2`.
pub fn stability_check(
    a: &RadialChannelFunction,
    z: f64,
    params: &PhysicalParams,
    spec: &QuadSpec,
) -> Result<StabilityReport> {
    check_charge(z)?;
    let zc = params.critical_charge();
    if z > zc * (1.0 + 1e-12) {
        return Err(domain("stability_check", format!("Z = {z} exceeds Z_c = {zc}")));
    }
    let form_value = stability_form(a, z, params, spec)?;
    let bound_value = (1.0 - z / zc) * params.rest_energy() * a.norm_squared(spec)?;
    Ok(StabilityReport {
        charge: z,
        form_value,
        bound_value,
        margin: form_value - bound_value,
    })
}

/// Seeded random suite: `trials` bump functions in `[1e-2, 1e2]`, each
/// checked at every `Z/Z_c` in `fractions`.
pub fn stability_suite(
    seed: u64,
    trials: usize,
    fractions: &[f64],
    params: &PhysicalParams,
    spec: &QuadSpec,
) -> Result<Vec<(RadialChannelFunction, Vec<StabilityReport>)>> {
    use rayon::prelude::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let functions = (0..trials)
        .map(|_| {
            let bumps = rng.random_range(1..=3);
            RadialChannelFunction::random_bumps(&mut rng, bumps, 1e-2, 1e2)
        })
        .collect::<Result<Vec<_>>>()?;
    let zc = params.critical_charge();
    functions
        .into_par_iter()
        .map(|a| {
            let reports = fractions
                .iter()
                .map(|&f| stability_check(&a, f * zc, params, spec))
                .collect::<Result<Vec<_>>>()?;
            Ok((a, reports))
        })
        .collect()
}
