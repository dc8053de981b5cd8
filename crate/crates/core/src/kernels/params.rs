use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// CODATA 2018 fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;

/// Physical constants in natural units (`hbar = 1`).
///
/// `mass` and `light_speed` are kept symbolic so that the massless limit and
/// the stability bound `(1 - Z/Z_c) m c^2` stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub light_speed: f64,
    pub alpha: f64,
    /// Nuclear charge `Z`.
    pub charge: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            light_speed: 1.0,
            alpha: FINE_STRUCTURE,
            charge: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(mass: f64, light_speed: f64, alpha: f64, charge: f64) -> Result<Self> {
        let params = Self {
            mass,
            light_speed,
            alpha,
            charge,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_charge(self, charge: f64) -> Result<Self> {
        Self::new(self.mass, self.light_speed, self.alpha, charge)
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(mass, self.light_speed, self.alpha, self.charge)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mass > 0.0
            && self.mass.is_finite()
            && self.light_speed > 0.0
            && self.light_speed.is_finite()
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.charge >= 0.0
            && self.charge.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "physical parameters out of range: {self:?} (need m > 0, c > 0, 0 < alpha < 1, Z >= 0)"
            )))
        }
    }

    /// Rest energy `m c^2`.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.light_speed * self.light_speed
    }

    pub fn critical_charge(&self) -> f64 {
        critical_charge_unchecked(self.alpha)
    }
}

/// Relativistic kinetic energy `e(p) = sqrt(c^2 p^2 + m^2 c^4)`.
pub fn energy(p: f64, params: &PhysicalParams) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(domain("energy", format!("momentum must be >= 0, got {p}")));
    }
    Ok(energy_unchecked(p, params))
}

pub(crate) fn energy_unchecked(p: f64, params: &PhysicalParams) -> f64 {
    (params.light_speed * p).hypot(params.rest_energy())
}

/// Critical nuclear charge `Z_c = 2 / ((pi/2 + 2/pi) alpha)`.
pub fn critical_charge(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain("critical_charge", format!("alpha must be > 0, got {alpha}")));
    }
    Ok(critical_charge_unchecked(alpha))
}

fn critical_charge_unchecked(alpha: f64) -> f64 {
    2.0 / ((0.5 * PI + 2.0 / PI) * alpha)
}

/// Spin label `s = +1/2` or `s = -1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }
}

/// Partial-wave channel `(l, m, s)`; `m` is stored doubled so it stays an
/// integer. The magnetic label never enters a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartialWaveIndex {
    l: usize,
    spin: Spin,
    twice_m: i32,
}

impl PartialWaveIndex {
    pub fn new(l: usize, spin: Spin, twice_m: i32) -> Result<Self> {
        let bad = |why: String| Err(domain("PartialWaveIndex", why));
        if twice_m % 2 == 0 {
            return bad(format!("m must be half-integer, got {twice_m}/2"));
        }
        let twice_top = 2 * l as i32 + 1;
        if twice_m.abs() > twice_top {
            return bad(format!("|m| = {}/2 exceeds l + 1/2", twice_m.abs()));
        }
        if spin == Spin::Down {
            if l == 0 {
                return bad("l = 0 has no s = -1/2 channel".into());
            }
            if twice_m.abs() == twice_top {
                return bad("|m| = l + 1/2 is excluded when s = -1/2".into());
            }
        }
        if l + 1 > super::special::L_MAX {
            return bad(format!("l = {l} needs Q_(l+1) beyond L_MAX"));
        }
        Ok(Self { l, spin, twice_m })
    }

    /// The channel `(l, m = 1/2, s)`; the representative used by the kernels.
    pub fn channel(l: usize, spin: Spin) -> Result<Self> {
        Self::new(l, spin, 1)
    }

    /// `l = 0, s = +1/2`, the dominant channel.
    pub fn dominant() -> Self {
        Self {
            l: 0,
            spin: Spin::Up,
            twice_m: 1,
        }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn m(&self) -> f64 {
        self.twice_m as f64 / 2.0
    }

    /// Degree of the second Legendre factor, `l + 2s`.
    pub fn shifted_degree(&self) -> usize {
        match self.spin {
            Spin::Up => self.l + 1,
            Spin::Down => self.l - 1,
        }
    }
}
