//! Logarithmic kernel factors and Legendre functions of the second kind.
//!
//! Everything here is evaluated through the distance to the logarithmic
//! singularity (`u - 1`, `z - 1` or the log-ratio `tau`) rather than the
//! raw argument, so that values stay accurate right up to the diagonal.

use crate::error::{domain, Result};

/// Largest Legendre degree supported by [`legendre_q`].
pub const L_MAX: usize = 8;

/// Below this value of `z - 1` the closed representation `P_l Q_0 - W_{l-1}`
/// is used; above it the hypergeometric series in `1/z^2`.
const EXPLICIT_ZM1_LIMIT: f64 = 0.05;

/// `log|(u+1)/(u-1)|`, with `g0(1) = +inf`.
pub fn g0(u: f64) -> Result<f64> {
    check_ratio("g0", u)?;
    Ok(g0_unchecked(u))
}

/// `(u + 1/u)/2 * g0(u) - 1`, with `g1(1) = +inf`.
pub fn g1(u: f64) -> Result<f64> {
    check_ratio("g1", u)?;
    Ok(g1_unchecked(u))
}

fn check_ratio(op: &'static str, u: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(domain(op, format!("argument must be positive and finite, got {u}")));
    }
    Ok(())
}

pub(crate) fn g0_unchecked(u: f64) -> f64 {
    if u == 1.0 {
        f64::INFINITY
    } else if u < 1.0 {
        (2.0 * u / (1.0 - u)).ln_1p()
    } else {
        (2.0 / (u - 1.0)).ln_1p()
    }
}

pub(crate) fn g1_unchecked(u: f64) -> f64 {
    let v = if u < 1.0 { u } else { 1.0 / u };
    if v < 0.5 {
        g1_series(v)
    } else {
        0.5 * (u + 1.0 / u) * g0_unchecked(u) - 1.0
    }
}

/// `g1(v) = sum_{k>=1} 4k/(4k^2-1) v^{2k}` for `0 <= v < 1`; avoids the
/// cancellation in the closed form when `v` is small.
fn g1_series(v: f64) -> f64 {
    let v2 = v * v;
    let mut power = v2;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = power * 4.0 * kf / (4.0 * kf * kf - 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        power *= v2;
    }
    sum
}

/// `(g0(x/y), g1(x/y))` with `x - y` formed directly, so the ratio is never
/// rounded before the logarithm.
pub(crate) fn g_pair(x: f64, y: f64) -> (f64, f64) {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let d = hi - lo;
    if d == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let g0 = (2.0 * lo / d).ln_1p();
    let v = lo / hi;
    let g1 = if v < 0.5 {
        g1_series(v)
    } else {
        0.5 * (hi / lo + v) * g0 - 1.0
    };
    (g0, g1)
}

/// `g0(e^tau)`, accurate for tiny `|tau|`.
pub(crate) fn g0_log(tau: f64) -> f64 {
    let a = tau.abs();
    if a == 0.0 {
        return f64::INFINITY;
    }
    let v = (-a).exp();
    let one_minus_v = -(-a).exp_m1();
    (2.0 * v / one_minus_v).ln_1p()
}

/// `g1(e^tau)`, accurate for tiny `|tau|` and large `|tau|`.
pub(crate) fn g1_log(tau: f64) -> f64 {
    let a = tau.abs();
    if a == 0.0 {
        return f64::INFINITY;
    }
    let v = (-a).exp();
    if v < 0.5 {
        g1_series(v)
    } else {
        a.cosh() * g0_log(a) - 1.0
    }
}

/// Legendre polynomial `P_l(z)` by the three-term recurrence.
pub fn legendre_p(l: usize, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, z);
    if l == 0 {
        return prev;
    }
    for k in 1..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * z * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Legendre function of the second kind `Q_l(z)` for `z > 1`, `l <= L_MAX`.
pub fn legendre_q(l: usize, z: f64) -> Result<f64> {
    if l > L_MAX {
        return Err(domain("legendre_q", format!("degree {l} exceeds L_MAX = {L_MAX}")));
    }
    if !(z > 1.0) || !z.is_finite() {
        return Err(domain("legendre_q", format!("argument must satisfy z > 1, got {z}")));
    }
    Ok(legendre_q_zm1(l, z - 1.0))
}

/// `Q_l(1 + zm1)`; taking `z - 1` directly keeps the logarithmic
/// singularity resolved when the caller can form it without cancellation.
pub(crate) fn legendre_q_zm1(l: usize, zm1: f64) -> f64 {
    debug_assert!(l <= L_MAX + 1);
    if zm1 == 0.0 {
        return f64::INFINITY;
    }
    let q0 = 0.5 * (2.0 / zm1).ln_1p();
    if l == 0 {
        return q0;
    }
    let z = 1.0 + zm1;
    if zm1 <= EXPLICIT_ZM1_LIMIT {
        legendre_p(l, z) * q0 - polynomial_part(l, z)
    } else {
        q_hypergeometric(l, z)
    }
}

/// `W_{l-1}(z) = sum_{k=1}^{l} P_{k-1}(z) P_{l-k}(z) / k`.
fn polynomial_part(l: usize, z: f64) -> f64 {
    let p: Vec<f64> = (0..l).map(|k| legendre_p(k, z)).collect();
    (1..=l).map(|k| p[k - 1] * p[l - k] / k as f64).sum()
}

/// `Q_l(z) = l! / ((2l+1)!! z^{l+1}) 2F1((l+1)/2, (l+2)/2; l+3/2; 1/z^2)`.
fn q_hypergeometric(l: usize, z: f64) -> f64 {
    let lf = l as f64;
    let mut prefactor = 1.0 / z;
    for k in 1..=l {
        prefactor *= k as f64 / ((2 * k + 1) as f64 * z);
    }
    let x = 1.0 / (z * z);
    let (a, b, c) = (0.5 * (lf + 1.0), 0.5 * (lf + 2.0), lf + 1.5);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..100_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * x;
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    prefactor * sum
}

/// `g_l(u) = Q_l((u + 1/u)/2)`.
pub fn g_l(l: usize, u: f64) -> Result<f64> {
    if l > L_MAX {
        return Err(domain("g_l", format!("degree {l} exceeds L_MAX = {L_MAX}")));
    }
    check_ratio("g_l", u)?;
    if u == 1.0 {
        return Ok(f64::INFINITY);
    }
    let v = if u < 1.0 { u } else { 1.0 / u };
    let zm1 = (1.0 - v) * (1.0 - v) / (2.0 * v);
    Ok(legendre_q_zm1(l, zm1))
}

/// `g_l(e^tau)`, with `cosh(tau) - 1` formed as `2 sinh^2(tau/2)`.
pub(crate) fn g_l_log(l: usize, tau: f64) -> f64 {
    let sh = (0.5 * tau).sinh();
    legendre_q_zm1(l, 2.0 * sh * sh)
}
