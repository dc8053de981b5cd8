//! Kernel functions, special functions and physical constants.
//!
//! All kernels here are symmetric and nonnegative, and carry a logarithmic
//! singularity on the diagonal `x = y`, where they evaluate to `+inf`.
//! Besides the public `(x, y)` evaluators each kernel has a log-coordinate
//! form `k(e^s, e^r) e^{(s+r)/2}` (see [`KernelSpec::eval_log`]) that stays
//! accurate arbitrarily close to the diagonal; that form is what the
//! quadrature and Nyström layers integrate.

mod params;
mod special;

use std::f64::consts::PI;
use std::fmt;

use crate::error::{domain, Result};

pub use params::{
    critical_charge, energy, PartialWaveIndex, PhysicalParams, Spin, FINE_STRUCTURE,
};
pub use special::{g0, g1, g_l, legendre_p, legendre_q, L_MAX};

pub(crate) use params::energy_unchecked;
pub(crate) use special::{
    g0_log, g0_unchecked, g1_log, g1_unchecked, g_l_log, g_pair, legendre_q_zm1,
};

/// `pi^2/4 + 1`, the norm of the reduced kernel `t` and of `t_0`.
pub const SHARP_CONSTANT: f64 = PI * PI / 4.0 + 1.0;

/// `int_0^inf g0(u) du/u`.
pub const G0_MELLIN: f64 = PI * PI / 2.0;

/// `int_0^inf g1(u) du/u`.
pub const G1_MELLIN: f64 = 2.0;

fn check_pair(op: &'static str, x: f64, y: f64) -> Result<()> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(domain(op, format!("arguments must be positive, got ({x}, {y})")));
    }
    Ok(())
}

/// The two weight profiles of the reduced kernel:
/// `sqrt((sqrt(x^2+1) + 1)/(x^2+1))` and `sqrt((sqrt(x^2+1) - 1)/(x^2+1))`.
#[inline]
pub(crate) fn channel_weights(x: f64) -> (f64, f64) {
    let h = x.hypot(1.0);
    let root = (h + 1.0).sqrt();
    (root / h, x / (h * root))
}

/// The reduced kernel `t(x, y)`.
pub fn kernel_t(x: f64, y: f64) -> Result<f64> {
    check_pair("kernel_t", x, y)?;
    Ok(t_unchecked(x, y))
}

pub(crate) fn t_unchecked(x: f64, y: f64) -> f64 {
    if x == y {
        return f64::INFINITY;
    }
    let (ax, bx) = channel_weights(x);
    let (ay, by) = channel_weights(y);
    let (g0, g1) = g_pair(x, y);
    0.5 * (ax * ay * g0 + bx * by * g1)
}

/// The massless kernel `t_0(x, y) = (g0(x/y) + g1(x/y)) / (2 sqrt(xy))`.
pub fn kernel_t0(x: f64, y: f64) -> Result<f64> {
    check_pair("kernel_t0", x, y)?;
    if x == y {
        return Ok(f64::INFINITY);
    }
    let (g0, g1) = g_pair(x, y);
    Ok((g0 + g1) / (2.0 * (x * y).sqrt()))
}

/// Partial-wave kernel `k_{l,s}(p', p)`.
pub fn kernel_k(
    index: &PartialWaveIndex,
    p_prime: f64,
    p: f64,
    params: &PhysicalParams,
) -> Result<f64> {
    check_pair("kernel_k", p_prime, p)?;
    params.validate()?;
    if p == p_prime {
        return Ok(f64::INFINITY);
    }
    let zm1 = (p - p_prime) * (p - p_prime) / (2.0 * p * p_prime);
    Ok(k_core(index, p_prime, p, zm1, params))
}

/// `k_{l,s}` with `w - 1` supplied, where `w = (p/p' + p'/p)/2`.
fn k_core(index: &PartialWaveIndex, p_prime: f64, p: f64, zm1: f64, params: &PhysicalParams) -> f64 {
    let e0 = params.rest_energy();
    let c = params.light_speed;
    let ep = energy_unchecked(p, params);
    let epp = energy_unchecked(p_prime, params);
    let q_a = legendre_q_zm1(index.l(), zm1);
    let q_b = legendre_q_zm1(index.shifted_degree(), zm1);
    let numerator = (epp + e0) * q_a * (ep + e0) + c * c * p_prime * q_b * p;
    let denominator = (2.0 * ep * (ep + e0)).sqrt() * (2.0 * epp * (epp + e0)).sqrt();
    numerator / denominator
}

/// The reduced kernel rebuilt from `k_{0,1/2}` through the substitution
/// `p = m c x`, `phi(x) = sqrt(e(m c x)) a(m c x)`:
/// `t(x, y) = m c^2 k_{0,1/2}(m c y, m c x) / sqrt(e(m c x) e(m c y))`.
///
/// This is a second, independent route to [`kernel_t`].
pub fn t_from_k(x: f64, y: f64, params: &PhysicalParams) -> Result<f64> {
    check_pair("t_from_k", x, y)?;
    let mc = params.mass * params.light_speed;
    let (p, p_prime) = (mc * x, mc * y);
    let k = kernel_k(&PartialWaveIndex::dominant(), p_prime, p, params)?;
    let scale = (energy_unchecked(p, params) * energy_unchecked(p_prime, params)).sqrt();
    Ok(params.rest_energy() * k / scale)
}

/// Selects one of the kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `t(x, y)`.
    MassiveT,
    /// `t_0(x, y)`.
    MasslessT0,
    /// `g_l(x/y) / sqrt(xy)`.
    HomogeneousG(usize),
    /// `k_{l,s}(y, x)`; uses [`KernelSpec::params`].
    PartialWaveK(PartialWaveIndex),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub params: PhysicalParams,
}

impl KernelSpec {
    pub fn massive_t() -> Self {
        Self {
            family: KernelFamily::MassiveT,
            params: PhysicalParams::default(),
        }
    }

    pub fn massless_t0() -> Self {
        Self {
            family: KernelFamily::MasslessT0,
            params: PhysicalParams::default(),
        }
    }

    pub fn homogeneous(l: usize) -> Result<Self> {
        if l > L_MAX {
            return Err(domain("KernelSpec", format!("degree {l} exceeds L_MAX")));
        }
        Ok(Self {
            family: KernelFamily::HomogeneousG(l),
            params: PhysicalParams::default(),
        })
    }

    pub fn partial_wave(index: PartialWaveIndex, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            family: KernelFamily::PartialWaveK(index),
            params,
        })
    }

    /// Kernel value at `(x, y)`; `+inf` on the diagonal.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self.family {
            KernelFamily::MassiveT => kernel_t(x, y),
            KernelFamily::MasslessT0 => kernel_t0(x, y),
            KernelFamily::HomogeneousG(l) => {
                check_pair("homogeneous kernel", x, y)?;
                Ok(g_l(l, x / y)? / (x * y).sqrt())
            }
            KernelFamily::PartialWaveK(index) => kernel_k(&index, y, x, &self.params),
        }
    }

    /// `k(e^s, e^r) e^{(s+r)/2}`: the kernel of the unitarily equivalent
    /// operator on `L^2(ds)` under `x = e^s`. The distance to the diagonal is
    /// taken as `r - s`, so no precision is lost near it.
    pub fn eval_log(&self, s: f64, r: f64) -> f64 {
        self.eval_log_offset(s, r - s)
    }

    /// [`Self::eval_log`] at `(s, s + tau)`, with the offset passed exactly.
    pub fn eval_log_offset(&self, s: f64, tau: f64) -> f64 {
        let r = s + tau;
        match self.family {
            KernelFamily::MassiveT => {
                let (ax, bx) = channel_weights(s.exp());
                let (ay, by) = channel_weights(r.exp());
                let g0 = g0_log(tau);
                let g1 = g1_log(tau);
                0.5 * (ax * ay * g0 + bx * by * g1) * (0.5 * (s + r)).exp()
            }
            KernelFamily::MasslessT0 => 0.5 * (g0_log(tau) + g1_log(tau)),
            KernelFamily::HomogeneousG(l) => g_l_log(l, tau),
            KernelFamily::PartialWaveK(index) => {
                let sh = (0.5 * tau).sinh();
                let (p, p_prime) = (s.exp(), r.exp());
                k_core(&index, p_prime, p, 2.0 * sh * sh, &self.params) * (0.5 * (s + r)).exp()
            }
        }
    }

    /// Known operator norm on `L^2(0, inf)`, when there is one.
    pub fn reference_norm(&self) -> Option<f64> {
        match self.family {
            KernelFamily::MassiveT | KernelFamily::MasslessT0 => Some(SHARP_CONSTANT),
            KernelFamily::HomogeneousG(0) => Some(G0_MELLIN),
            KernelFamily::HomogeneousG(1) => Some(G1_MELLIN),
            _ => None,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(
            self.family,
            KernelFamily::MasslessT0 | KernelFamily::HomogeneousG(_)
        )
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::MassiveT => write!(f, "t"),
            KernelFamily::MasslessT0 => write!(f, "t0"),
            KernelFamily::HomogeneousG(l) => write!(f, "g{l}"),
            KernelFamily::PartialWaveK(idx) => {
                let s = if idx.spin() == Spin::Up { "+" } else { "-" };
                write!(f, "k(l={},s={}1/2)", idx.l(), s)
            }
        }
    }
}

/// One pair where `k_{l,s} > k_{0,1/2}` beyond the slack.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceViolation {
    pub l: usize,
    pub spin: Spin,
    pub p_prime: f64,
    pub p: f64,
    pub value: f64,
    pub dominant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub pairs_checked: usize,
    /// Largest `k_{l,s} / k_{0,1/2}` seen.
    pub worst_ratio: f64,
    pub violations: Vec<DominanceViolation>,
}

/// Checks `0 <= k_{l,s} <= k_{0,1/2} (1 + slack)` for `1 <= l <= l_max`,
/// both spins, on a `grid x grid` log-uniform grid over `[lo, hi]^2`
/// (diagonal excluded).
pub fn dominance_scan(
    l_max: usize,
    grid: usize,
    lo: f64,
    hi: f64,
    slack: f64,
    params: &PhysicalParams,
) -> Result<DominanceReport> {
    if l_max + 1 > L_MAX || grid < 2 || !(lo > 0.0 && hi > lo) {
        return Err(crate::Error::InvalidInput(format!(
            "dominance scan needs l_max < {L_MAX}, grid >= 2 and 0 < lo < hi"
        )));
    }
    let points: Vec<f64> = (0..grid)
        .map(|i| lo * (hi / lo).powf(i as f64 / (grid - 1) as f64))
        .collect();
    let dominant = PartialWaveIndex::dominant();
    let mut report = DominanceReport {
        pairs_checked: 0,
        worst_ratio: 0.0,
        violations: Vec::new(),
    };
    for l in 1..=l_max {
        for spin in [Spin::Up, Spin::Down] {
            let index = PartialWaveIndex::channel(l, spin)?;
            for &p_prime in &points {
                for &p in &points {
                    if p == p_prime {
                        continue;
                    }
                    let value = kernel_k(&index, p_prime, p, params)?;
                    let reference = kernel_k(&dominant, p_prime, p, params)?;
                    report.pairs_checked += 1;
                    report.worst_ratio = report.worst_ratio.max(value / reference);
                    if value < 0.0 || value > reference * (1.0 + slack) {
                        report.violations.push(DominanceViolation {
                            l,
                            spin,
                            p_prime,
                            p,
                            value,
                            dominant: reference,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}
