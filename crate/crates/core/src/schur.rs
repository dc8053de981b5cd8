//! Weighted Schur-test bounds for the reduced kernel and the analysis of the
//! closed-form bound function `F`.
//!
//! For a homogeneous symmetric factor `g` (`g(1/u) = g(u)`) and a positive
//! weight `h`,
//!
//! ```text
//! int int f(x) g(x/y) f(y) dx dy <= int f(x)^2 [ int h(y)/h(x) g(y/x) dy ] dx,
//! ```
//!
//! and splitting `t` into its `g0` and `g1` channels with one weight each gives
//! `||T|| <= sup_x B(x)` for the bound function `B` of [`bound_function`].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kernels::{g0, g1, SHARP_CONSTANT};
use crate::quadrature::{try_integrate_semi_infinite, QuadSpec};

/// Shareable positive scalar function.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Weights `(h0, h1)` for the `g0` and `g1` channels.
#[derive(Clone)]
pub struct WeightPair {
    h0: ScalarFn,
    h1: ScalarFn,
    pub label0: String,
    pub label1: String,
}

impl fmt::Debug for WeightPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightPair")
            .field("h0", &self.label0)
            .field("h1", &self.label1)
            .finish()
    }
}

/// Positivity is checked on this many log-spaced points of `[1e-6, 1e6]`.
const POSITIVITY_SAMPLES: usize = 241;

impl WeightPair {
    pub fn new(h0: ScalarFn, h1: ScalarFn, label0: &str, label1: &str) -> Result<Self> {
        for i in 0..POSITIVITY_SAMPLES {
            let x = 10f64.powf(-6.0 + 12.0 * i as f64 / (POSITIVITY_SAMPLES - 1) as f64);
            for (h, label) in [(&h0, label0), (&h1, label1)] {
                let v = h(x);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "weight {label} is not positive at x = {x:e} (value {v})"
                    )));
                }
            }
        }
        Ok(Self {
            h0,
            h1,
            label0: label0.to_owned(),
            label1: label1.to_owned(),
        })
    }

    /// `h0(x) = x/(x^2+1)`, `h1(x) = 1/x`: the pair for which the bound
    /// function has the closed form [`closed_form_bound`].
    pub fn sharp() -> Self {
        Self {
            h0: Arc::new(|x| x / (x * x + 1.0)),
            h1: Arc::new(|x| 1.0 / x),
            label0: "x/(x^2+1)".into(),
            label1: "1/x".into(),
        }
    }

    /// `h0 = h1 = 1/x`.
    pub fn unweighted() -> Self {
        Self {
            h0: Arc::new(|x| 1.0 / x),
            h1: Arc::new(|x| 1.0 / x),
            label0: "1/x".into(),
            label1: "1/x".into(),
        }
    }

    /// Weights tabulated at increasing `xs`, interpolated linearly in
    /// `(ln x, ln h)` and extended by the end slopes.
    pub fn from_table(xs: &[f64], h0: &[f64], h1: &[f64]) -> Result<Self> {
        if xs.len() < 2 || h0.len() != xs.len() || h1.len() != xs.len() {
            return Err(Error::InvalidInput(
                "weight table needs at least two rows of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || xs[0] <= 0.0 {
            return Err(Error::InvalidInput("table abscissae must be positive and increasing".into()));
        }
        if h0.iter().chain(h1).any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("tabulated weights must be positive".into()));
        }
        let lx: Arc<Vec<f64>> = Arc::new(xs.iter().map(|x| x.ln()).collect());
        let make = |h: &[f64]| -> ScalarFn {
            let lh: Vec<f64> = h.iter().map(|v| v.ln()).collect();
            let lx = Arc::clone(&lx);
            Arc::new(move |x: f64| log_log_interpolate(&lx, &lh, x.ln()))
        };
        Self::new(make(h0), make(h1), "table h0", "table h1")
    }

    pub fn h0(&self, x: f64) -> f64 {
        (self.h0)(x)
    }

    pub fn h1(&self, x: f64) -> f64 {
        (self.h1)(x)
    }
}

fn log_log_interpolate(lx: &[f64], lh: &[f64], t: f64) -> f64 {
    let n = lx.len();
    let i = match lx.partition_point(|&v| v <= t) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let slope = (lh[i + 1] - lh[i]) / (lx[i + 1] - lx[i]);
    (lh[i] + slope * (t - lx[i])).exp()
}

fn check_x(op: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(op, format!("x must be positive and finite, got {x}")));
    }
    Ok(())
}

/// `int_0^inf h(y) g(y/x) dy`, with `y = x` declared singular.
pub fn weighted_row_integral<G, H>(g: G, h: H, x: f64, spec: &QuadSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
    H: Fn(f64) -> f64,
{
    check_x("weighted_row_integral", x)?;
    let spec = spec.with_singular_points(&[x]);
    Ok(try_integrate_semi_infinite(|y| Ok(h(y) * g(y / x)?), &spec)?.value)
}

/// `int_0^inf h(y)/h(x) g(y/x) dy`, the weighted Schur row integral.
///
/// For `h(u) = 1/u` this equals `x int_0^inf g(u) du/u`.
pub fn schur_rhs_homogeneous<G, H>(g: G, h: H, x: f64, spec: &QuadSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
    H: Fn(f64) -> f64,
{
    check_x("schur_rhs_homogeneous", x)?;
    let hx = h(x);
    if !(hx > 0.0) || !hx.is_finite() {
        return Err(domain("schur_rhs_homogeneous", format!("h({x}) = {hx} is not positive")));
    }
    Ok(weighted_row_integral(g, h, x, spec)? / hx)
}

/// `int_0^inf g(u) du/u`, the norm of `f -> int g(x/y) f(y) dy / sqrt(xy)`.
pub fn homogeneous_norm<G>(g: G, spec: &QuadSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let spec = spec.with_singular_points(&[1.0]);
    Ok(try_integrate_semi_infinite(|u| Ok(g(u)? / u), &spec)?.value)
}

/// `int_0^inf y/(y^2+1) g0(y/x) dy = pi arctan x`.
pub fn closed_form_h0_integral(x: f64) -> f64 {
    PI * x.atan()
}

/// The Schur bound function of the reduced kernel:
/// `1/2 [ (s+1)/(x^2+1) R0(x) + (s-1)/(x^2+1) R1(x) ]` with `s = sqrt(x^2+1)`
/// and `Rj` the weighted row integrals of `gj` against `hj`.
pub fn bound_function(w: &WeightPair, x: f64, spec: &QuadSpec) -> Result<f64> {
    check_x("bound_function", x)?;
    let (plus, minus) = channel_coefficients(x);
    let r0 = schur_rhs_homogeneous(g0, |y| w.h0(y), x, spec)?;
    let r1 = schur_rhs_homogeneous(g1, |y| w.h1(y), x, spec)?;
    Ok(0.5 * (plus * r0 + minus * r1))
}

/// `((s+1)/(x^2+1), (s-1)/(x^2+1))`, with `s - 1` formed as `x^2/(s+1)`.
fn channel_coefficients(x: f64) -> (f64, f64) {
    let s = x.hypot(1.0);
    let q = x * x + 1.0;
    ((s + 1.0) / q, x * x / ((s + 1.0) * q))
}

/// Closed form of [`bound_function`] for [`WeightPair::sharp`]:
/// `F(x) = (pi/2)(s+1) arctan(x)/x + (s-1) x/(x^2+1)`.
///
/// `F(0) = pi` and `F(inf) = pi^2/4 + 1` by continuity.
pub fn closed_form_bound(x: f64) -> f64 {
    if x == 0.0 {
        return PI;
    }
    if x == f64::INFINITY {
        return SHARP_CONSTANT;
    }
    let s = x.hypot(1.0);
    let atan_over_x = if x < 1e-8 { 1.0 - x * x / 3.0 } else { x.atan() / x };
    FRAC_PI_2 * (s + 1.0) * atan_over_x + x * x / (s + 1.0) * x / (x * x + 1.0)
}

/// `F(tan 2v) = (pi v + 4 sin^4 v)/tan v` on `(0, pi/4]`.
pub fn bound_tangent_form(v: f64) -> f64 {
    (PI * v + 4.0 * v.sin().powi(4)) / v.tan()
}

/// `f(v) = pi v + 4 sin^4 v - C tan v`; `F <= C` is equivalent to `f <= 0`
/// on `[0, pi/4]`.
pub fn tangent_f(v: f64) -> f64 {
    PI * v + 4.0 * v.sin().powi(4) - SHARP_CONSTANT * v.tan()
}

/// `f'(v) = pi + 16 sin^3 v cos v - C sec^2 v`.
pub fn tangent_f_derivative(v: f64) -> f64 {
    let c = v.cos();
    PI + 16.0 * v.sin().powi(3) * c - SHARP_CONSTANT / (c * c)
}

/// `f''(v) = 2 sin v sec^3 v g(v)`.
pub fn tangent_f_second_derivative(v: f64) -> f64 {
    2.0 * v.sin() / v.cos().powi(3) * tangent_g(v)
}

/// `g(v) = 3 sin 2v + 3 sin 4v + sin 6v - C`.
pub fn tangent_g(v: f64) -> f64 {
    3.0 * (2.0 * v).sin() + 3.0 * (4.0 * v).sin() + (6.0 * v).sin() - SHARP_CONSTANT
}

/// `g'(v) = 12 cos 4v (1 + cos 2v)`.
pub fn tangent_g_derivative(v: f64) -> f64 {
    12.0 * (4.0 * v).cos() * (1.0 + (2.0 * v).cos())
}

/// Supremum search settings for [`schur_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub grid_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Abort with `UnboundedAbove` once a sample exceeds this.
    pub ceiling: f64,
    /// Golden-section stopping width in `ln x`.
    pub refine_tol: f64,
    /// Decades at which the `x -> inf` limit is extrapolated.
    pub limit_decades: Vec<i32>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid_points: 400,
            x_min: 1e-4,
            x_max: 1e4,
            ceiling: 1e6,
            refine_tol: 1e-7,
            limit_decades: vec![5, 6, 7, 8],
        }
    }
}

impl SearchSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grid_points >= 3
            && self.x_min > 0.0
            && self.x_max > self.x_min
            && self.ceiling > 0.0
            && self.refine_tol > 0.0
            && self.limit_decades.len() >= 2
            && self.limit_decades.windows(2).all(|w| w[1] == w[0] + 1);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid search settings: {self:?}")))
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.x_min.ln(), self.x_max.ln());
        let n = self.grid_points;
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// A root isolated inside `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupremumReport {
    pub sup_value: f64,
    /// Refined interior local maxima `(x, B(x))`.
    pub arg_candidates: Vec<(f64, f64)>,
    /// Whether the supremum is reached at a finite `x`.
    pub attained: bool,
    pub roots: Vec<RootBracket>,
    /// Extrapolated `lim_{x -> inf}`.
    pub limit_value: f64,
    /// Grid samples `(x, B(x))`.
    pub samples: Vec<(f64, f64)>,
}

/// Relative margin by which a finite maximum must beat the limit to count
/// as attained.
const ATTAINED_MARGIN: f64 = 1e-9;

/// `sup_x B(x)` for the weight pair: grid scan, golden-section refinement
/// around every interior local maximum, and Richardson extrapolation of
/// the `x -> inf` limit.
pub fn schur_bound(w: &WeightPair, search: &SearchSettings, spec: &QuadSpec) -> Result<SupremumReport> {
    search.validate()?;
    let eval = |x: f64| -> Result<f64> {
        let v = bound_function(w, x, spec)?;
        if v > search.ceiling {
            return Err(Error::UnboundedAbove {
                x,
                ceiling: search.ceiling,
            });
        }
        Ok(v)
    };
    let grid = search.grid();
    let values = grid.par_iter().map(|&x| eval(x)).collect::<Result<Vec<f64>>>()?;

    let mut arg_candidates = Vec::new();
    for i in 1..grid.len() - 1 {
        if values[i] >= values[i - 1] && values[i] >= values[i + 1] {
            let (x, v) = golden_max(&eval, grid[i - 1].ln(), grid[i + 1].ln(), search.refine_tol)?;
            arg_candidates.push((x, v.max(values[i])));
        }
    }

    let tail: Vec<f64> = search
        .limit_decades
        .iter()
        .map(|&d| eval(10f64.powi(d)))
        .collect::<Result<_>>()?;
    // B(x) = L + c/x + ..., so one Richardson step per decade.
    let n = tail.len();
    let limit_value = (10.0 * tail[n - 1] - tail[n - 2]) / 9.0;

    let best_finite = arg_candidates
        .iter()
        .map(|c| c.1)
        .chain(values.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let attained = best_finite > limit_value * (1.0 + ATTAINED_MARGIN);
    Ok(SupremumReport {
        sup_value: best_finite.max(limit_value),
        arg_candidates,
        attained,
        roots: Vec::new(),
        limit_value,
        samples: grid.into_iter().zip(values).collect(),
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f(e^t)` over `t` in `[a, b]`.
fn golden_max<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        }
    }
    Ok(if fc >= fd { (c.exp(), fc) } else { (d.exp(), fd) })
}

/// Number of scan cells for root isolation on `[0, pi/4]`.
const ROOT_SCAN_CELLS: usize = 1000;
/// Points at which `f <= 0` is sampled.
const F_GRID_POINTS: usize = 4000;
const ROOT_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-10;

/// Shows `sup F = pi^2/4 + 1` through the tangent substitution `x = tan 2v`:
/// isolates the two roots of `g` on `(0, pi/4)`, checks the sign pattern
/// `(-, +, -)` of `g`, checks `f(0) = f(pi/4) = 0` and `f <= 0` on a dense
/// grid. Any failed check is an `AnalysisFailure`.
pub fn sup_f_analysis() -> Result<SupremumReport> {
    let end = FRAC_PI_4;
    let step = end / ROOT_SCAN_CELLS as f64;
    let mut roots = Vec::new();
    let mut prev = tangent_g(0.0);
    for i in 1..=ROOT_SCAN_CELLS {
        let hi = i as f64 * step;
        let cur = tangent_g(hi);
        if prev.signum() != cur.signum() || cur == 0.0 {
            let lo = hi - step;
            roots.push(RootBracket {
                lo,
                hi,
                root: bisect(tangent_g, lo, hi, ROOT_TOL),
            });
        }
        prev = cur;
    }
    if roots.len() != 2 {
        return Err(Error::AnalysisFailure(format!(
            "expected two roots of g on (0, pi/4), found {}",
            roots.len()
        )));
    }
    let (v1, v2) = (roots[0].root, roots[1].root);
    for i in 0..=F_GRID_POINTS {
        let v = end * i as f64 / F_GRID_POINTS as f64;
        let g = tangent_g(v);
        let expected_positive = v > v1 && v < v2;
        let near_root = (v - v1).abs() < 1e-9 || (v - v2).abs() < 1e-9;
        if !near_root && (g > 0.0) != expected_positive {
            return Err(Error::AnalysisFailure(format!("g has the wrong sign at v = {v}")));
        }
        let f = tangent_f(v);
        if f > SIGN_TOL {
            return Err(Error::AnalysisFailure(format!("f(v) = {f:e} > 0 at v = {v}")));
        }
    }
    for v in [0.0, end] {
        if tangent_f(v).abs() > 1e-12 {
            return Err(Error::AnalysisFailure(format!("f({v}) = {:e} is not 0", tangent_f(v))));
        }
    }
    if !(tangent_f_derivative(0.0) < 0.0 && tangent_f_derivative(end) > 0.0) {
        return Err(Error::AnalysisFailure("f' has the wrong endpoint signs".into()));
    }
    let arg_candidates = (1..F_GRID_POINTS)
        .map(|i| end * i as f64 / F_GRID_POINTS as f64)
        .map(|v| ((2.0 * v).tan(), bound_tangent_form(v)))
        .fold(None::<(f64, f64)>, |best, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
        .into_iter()
        .collect();
    Ok(SupremumReport {
        sup_value: SHARP_CONSTANT,
        arg_candidates,
        attained: false,
        roots,
        limit_value: SHARP_CONSTANT,
        samples: Vec::new(),
    })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Relative spread `max/min - 1` over `[0.5, 2]` of the ratio between
/// `h0(x) sqrt((x^2+1)/(s+1))` and `h1(x) sqrt((x^2+1)/(s-1))`.
///
/// An extremal function would force this ratio to be constant.
pub fn proportionality_spread(w: &WeightPair) -> f64 {
    let ratios: Vec<f64> = (0..=64)
        .map(|i| 0.5 * 4f64.powf(i as f64 / 64.0))
        .map(|x| {
            let (plus, minus) = channel_coefficients(x);
            (w.h0(x) / plus.sqrt()) / (w.h1(x) / minus.sqrt())
        })
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    max / min - 1.0
}
