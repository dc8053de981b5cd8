//! Adaptive integration on bounded and semi-infinite intervals with declared
//! logarithmic (or other integrable) singularities.
//!
//! Panels are Gauss-Kronrod 7/15 rules. Declared singular points are always
//! panel boundaries, so no node ever lands on one; global bisection of the
//! worst panel then accumulates panels geometrically toward them.

mod rules;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub use rules::gauss_legendre;
use rules::{gauss_kronrod_15, PanelEstimate};

/// Variable change used beyond the last breakpoint of a semi-infinite
/// integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailMap {
    /// `u = B e^v`, integrated over doubling chunks in `v` until they stop
    /// contributing.
    #[default]
    Exponential,
    /// `u = B + v / (1 - v)`, `v` in `[0, 1)`.
    Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisection budget per interval integration.
    pub max_subdivisions: usize,
    /// Sorted, distinct.
    pub singular_points: Vec<f64>,
    pub tail_map: TailMap,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 4096,
            singular_points: Vec::new(),
            tail_map: TailMap::Exponential,
        }
    }
}

impl QuadSpec {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    /// Returns a copy with `points` merged into the singular set.
    pub fn with_singular_points(&self, points: &[f64]) -> Self {
        let mut merged = self.singular_points.clone();
        merged.extend_from_slice(points);
        merged.sort_by(f64::total_cmp);
        merged.dedup();
        Self {
            singular_points: merged,
            ..self.clone()
        }
    }

    /// Same spec with tolerances scaled by `factor` (for inner integrals).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput("max_subdivisions must be positive".into()));
        }
        let sorted = self.singular_points.windows(2).all(|w| w[0] < w[1]);
        if !sorted || self.singular_points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(
                "singular points must be finite, sorted and distinct".into(),
            ));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl IntegralResult {
    fn combine(parts: &[IntegralResult], spec: &QuadSpec) -> Self {
        let value = neumaier_sum(parts.iter().map(|p| p.value));
        let error_estimate: f64 = parts.iter().map(|p| p.error_estimate).sum();
        IntegralResult {
            value,
            error_estimate,
            subdivisions_used: parts.iter().map(|p| p.subdivisions_used).sum(),
            converged: parts.iter().all(|p| p.converged)
                && error_estimate <= spec.target(value),
        }
    }
}

/// Compensated summation in iteration order.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

struct Ranked(PanelEstimate);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

fn splittable(p: &PanelEstimate) -> bool {
    let width = p.b - p.a;
    let scale = p.a.abs().max(p.b.abs());
    width > 1e3 * f64::EPSILON * scale && width > 1e-300
}

/// `int_a^b f` for a fallible integrand.
pub fn try_integrate_interval<F>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("interval must satisfy a < b, got [{a}, {b}]")));
    }
    let mut breaks = vec![a];
    breaks.extend(spec.singular_points.iter().copied().filter(|&p| p > a && p < b));
    breaks.push(b);

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<PanelEstimate> = Vec::new();
    let mut total = 0.0;
    let mut total_error = 0.0;
    for w in breaks.windows(2) {
        let p = gauss_kronrod_15(&mut f, w[0], w[1])?;
        total += p.value;
        total_error += p.error;
        heap.push(Ranked(p));
    }

    let mut subdivisions = 0;
    loop {
        if total_error <= spec.target(total) {
            // Re-sum exactly before declaring success; the running totals drift.
            let (value, error) = exact_totals(&heap, &frozen);
            total = value;
            total_error = error;
            if error <= spec.target(value) {
                return Ok(IntegralResult {
                    value,
                    error_estimate: error,
                    subdivisions_used: subdivisions,
                    converged: true,
                });
            }
        }
        let worst = match heap.pop() {
            Some(Ranked(p)) => p,
            None => break,
        };
        if !splittable(&worst) {
            frozen.push(worst);
            continue;
        }
        if subdivisions >= spec.max_subdivisions {
            heap.push(Ranked(worst));
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gauss_kronrod_15(&mut f, worst.a, mid)?;
        let right = gauss_kronrod_15(&mut f, mid, worst.b)?;
        subdivisions += 1;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(Ranked(left));
        heap.push(Ranked(right));
    }
    let (value, error) = exact_totals(&heap, &frozen);
    Err(Error::NonConvergence {
        best: IntegralResult {
            value,
            error_estimate: error,
            subdivisions_used: subdivisions,
            converged: false,
        },
    })
}

fn exact_totals(heap: &BinaryHeap<Ranked>, frozen: &[PanelEstimate]) -> (f64, f64) {
    let mut panels: Vec<&PanelEstimate> = heap.iter().map(|r| &r.0).chain(frozen).collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = neumaier_sum(panels.iter().map(|p| p.value));
    let error = panels.iter().map(|p| p.error).sum();
    (value, error)
}

/// `int_a^b f`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    try_integrate_interval(|x| Ok(f(x)), a, b, spec)
}

/// `int_0^inf f`, for a fallible integrand.
///
/// The head `[0, B]` (with `B = max(1, last singular point)`) is split at the
/// declared singular points and at 1; the tail `[B, inf)` goes through
/// [`QuadSpec::tail_map`].
pub fn try_integrate_semi_infinite<F>(mut f: F, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    if spec.singular_points.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidInput("singular points must lie in [0, inf)".into()));
    }
    let head_spec = spec.with_singular_points(&[1.0]);
    let split = head_spec.singular_points.last().copied().unwrap_or(1.0).max(1.0);
    let head = try_integrate_interval(&mut f, 0.0, split, &head_spec)?;
    let tail = match spec.tail_map {
        TailMap::Exponential => exponential_tail(&mut f, split, head.value, spec)?,
        TailMap::Rational => rational_tail(&mut f, split, spec)?,
    };
    Ok(IntegralResult::combine(&[head, tail], spec))
}

/// `int_0^inf f`.
pub fn integrate_semi_infinite<F>(f: F, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    try_integrate_semi_infinite(|x| Ok(f(x)), spec)
}

/// Largest `v` for which `e^v` is representable with room to spare.
const MAX_LOG_EXTENT: f64 = 640.0;

fn exponential_tail<F>(f: &mut F, start: f64, head: f64, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut chunk_spec = QuadSpec {
        singular_points: Vec::new(),
        ..spec.clone()
    };
    let mut parts: Vec<IntegralResult> = Vec::new();
    let mut running = head;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut previous: Option<f64> = None;
    loop {
        chunk_spec.abs_tol = spec.abs_tol.max(0.05 * spec.rel_tol * running.abs());
        let chunk = try_integrate_interval(
            |v| {
                let scale = start * v.exp();
                Ok(f(scale)? * scale)
            },
            lo,
            hi,
            &chunk_spec,
        )?;
        running += chunk.value;
        parts.push(chunk);
        let size = chunk.value.abs() + chunk.error_estimate;
        let negligible = size <= 0.05 * spec.target(running);
        if negligible && parts.len() >= 2 {
            break;
        }
        if let Some(prev) = previous {
            if hi >= 64.0 && size >= prev {
                let best = IntegralResult::combine(&parts, spec);
                return Err(Error::DivergentTail {
                    at: start * lo.exp(),
                    best,
                });
            }
        }
        previous = Some(size);
        if hi >= MAX_LOG_EXTENT {
            let best = IntegralResult::combine(&parts, spec);
            return Err(Error::DivergentTail {
                at: start * lo.exp(),
                best,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(MAX_LOG_EXTENT);
    }
    Ok(IntegralResult::combine(&parts, spec))
}

fn rational_tail<F>(f: &mut F, start: f64, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let tail_spec = QuadSpec {
        singular_points: Vec::new(),
        ..spec.clone()
    };
    let result = try_integrate_interval(
        |v| {
            let w = 1.0 - v;
            Ok(f(start + v / w)? / (w * w))
        },
        0.0,
        1.0,
        &tail_spec,
    );
    match result {
        Err(Error::NonConvergence { best }) => Err(Error::DivergentTail { at: start, best }),
        other => other,
    }
}

/// Options for iterated two-dimensional integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DoubleOptions {
    /// The integrand has an integrable singularity on `x = y`.
    pub diag_singular: bool,
    /// `f(x, y) = f(y, x)`: integrate over `y > x` and double.
    pub symmetric: bool,
}

/// Inner tolerances are this factor tighter than the outer ones.
const INNER_TIGHTENING: f64 = 0.1;

/// `int_0^inf int_0^inf f(x, y) dy dx` by iterated integration.
pub fn try_double_integral<F>(f: F, options: DoubleOptions, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let inner_spec = QuadSpec {
        singular_points: Vec::new(),
        ..spec.tightened(INNER_TIGHTENING)
    };
    let outer = |x: f64| -> Result<f64> {
        if options.symmetric {
            let r = try_integrate_semi_infinite(|tau| f(x, x + tau), &inner_spec)?;
            Ok(2.0 * r.value)
        } else {
            let s = if options.diag_singular {
                inner_spec.with_singular_points(&[x])
            } else {
                inner_spec.clone()
            };
            Ok(try_integrate_semi_infinite(|y| f(x, y), &s)?.value)
        }
    };
    try_integrate_semi_infinite(outer, spec)
}

pub fn double_integral<F>(f: F, options: DoubleOptions, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64,
{
    try_double_integral(|x, y| Ok(f(x, y)), options, spec)
}

/// `int_lo^hi int_lo^hi f(x, y) dy dx` by iterated integration.
///
/// With `diag_singular` the inner integral runs over the offset `|y - x|`,
/// so the singular endpoint sits at zero where panels can shrink freely.
pub fn try_double_integral_box<F>(
    f: F,
    lo: f64,
    hi: f64,
    options: DoubleOptions,
    spec: &QuadSpec,
) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if !options.diag_singular {
        let inner_spec = QuadSpec {
            singular_points: Vec::new(),
            ..spec.tightened(INNER_TIGHTENING)
        };
        let outer = |x: f64| -> Result<f64> {
            if options.symmetric {
                if x >= hi {
                    return Ok(0.0);
                }
                Ok(2.0 * try_integrate_interval(|y| f(x, y), x, hi, &inner_spec)?.value)
            } else {
                Ok(try_integrate_interval(|y| f(x, y), lo, hi, &inner_spec)?.value)
            }
        };
        return try_integrate_interval(outer, lo, hi, spec);
    }
    if options.symmetric {
        return try_offset_double_integral_box(|x, tau| f(x, x + tau), lo, hi, spec);
    }
    let inner_spec = QuadSpec {
        singular_points: Vec::new(),
        ..spec.tightened(INNER_TIGHTENING)
    };
    let outer = |x: f64| -> Result<f64> {
        let mut sum = 0.0;
        if x > lo {
            sum += try_integrate_interval(|tau| f(x, x - tau), 0.0, x - lo, &inner_spec)?.value;
        }
        if x < hi {
            sum += try_integrate_interval(|tau| f(x, x + tau), 0.0, hi - x, &inner_spec)?.value;
        }
        Ok(sum)
    };
    try_integrate_interval(outer, lo, hi, spec)
}

/// `2 int_lo^hi int_0^(hi - x) f(x, tau) dtau dx`: the symmetric box
/// integral of a kernel given as a function of base point and offset.
pub fn try_offset_double_integral_box<F>(f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let inner_spec = QuadSpec {
        singular_points: Vec::new(),
        ..spec.tightened(INNER_TIGHTENING)
    };
    let outer = |x: f64| -> Result<f64> {
        let width = hi - x;
        if width <= 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * try_integrate_interval(|tau| f(x, tau), 0.0, width, &inner_spec)?.value)
    };
    try_integrate_interval(outer, lo, hi, spec)
}

pub fn double_integral_box<F>(
    f: F,
    lo: f64,
    hi: f64,
    options: DoubleOptions,
    spec: &QuadSpec,
) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64,
{
    try_double_integral_box(|x, y| Ok(f(x, y)), lo, hi, options, spec)
}
