//! Conversion between SI and the internal natural units (hbar = c = m_e = eps0 = 1).
//!
//! Any SI quantity with dimension M^a L^b T^c I^d is a pure number times
//! hbar^p c^q m_e^r eps0^s, with s = d/2, p = b + c - s, q = b - 2p + 3s,
//! r = a - p + s.

use serde::{Deserialize, Serialize};

pub const HBAR_SI: f64 = 1.054_571_817e-34;
pub const C_SI: f64 = 299_792_458.0;
pub const M_E_SI: f64 = 9.109_383_701_5e-31;
pub const EPS0_SI: f64 = 8.854_187_812_8e-12;
pub const E_CHARGE_SI: f64 = 1.602_176_634e-19;
/// Fine-structure constant implied by the SI constants above.
pub const ALPHA_FS: f64 = E_CHARGE_SI * E_CHARGE_SI / (4.0 * std::f64::consts::PI * EPS0_SI * HBAR_SI * C_SI);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Si,
    Internal,
}

/// Exponents of kg, m, s, A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dim {
    pub mass: f64,
    pub length: f64,
    pub time: f64,
    pub current: f64,
}

impl Dim {
    pub const fn new(mass: f64, length: f64, time: f64, current: f64) -> Self {
        Dim { mass, length, time, current }
    }

    /// Exponents (p, q, r, s) of hbar, c, m_e, eps0 carrying this dimension.
    pub fn natural_exponents(&self) -> [f64; 4] {
        let s = self.current / 2.0;
        let p = self.length + self.time - s;
        let q = self.length - 2.0 * p + 3.0 * s;
        let r = self.mass - p + s;
        [p, q, r, s]
    }

    /// Size of one internal unit of this dimension, expressed in SI.
    pub fn si_scale(&self) -> f64 {
        let [p, q, r, s] = self.natural_exponents();
        HBAR_SI.powf(p) * C_SI.powf(q) * M_E_SI.powf(r) * EPS0_SI.powf(s)
    }
}

pub const MASS: Dim = Dim::new(1.0, 0.0, 0.0, 0.0);
pub const LENGTH: Dim = Dim::new(0.0, 1.0, 0.0, 0.0);
pub const FREQUENCY: Dim = Dim::new(0.0, 0.0, -1.0, 0.0);
pub const CHARGE: Dim = Dim::new(0.0, 0.0, 1.0, 1.0);
pub const ENERGY: Dim = Dim::new(1.0, 2.0, -2.0, 0.0);
pub const MOMENTUM: Dim = Dim::new(1.0, 1.0, -1.0, 0.0);
/// Tesla = kg s^-2 A^-1.
pub const MAGNETIC_FIELD: Dim = Dim::new(1.0, 0.0, -2.0, -1.0);
/// Coefficient of x*y*z in an energy: J m^-3.
pub const CHIRAL_COUPLING: Dim = Dim::new(1.0, -1.0, -2.0, 0.0);

pub fn to_internal(si_value: f64, dim: Dim) -> f64 {
    si_value / dim.si_scale()
}

pub fn to_si(internal_value: f64, dim: Dim) -> f64 {
    internal_value * dim.si_scale()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_constants_are_unity() {
        let hbar = Dim::new(1.0, 2.0, -1.0, 0.0);
        let c = Dim::new(0.0, 1.0, -1.0, 0.0);
        let eps0 = Dim::new(-1.0, -3.0, 4.0, 2.0);
        assert!((to_internal(HBAR_SI, hbar) - 1.0).abs() < 1e-14);
        assert!((to_internal(C_SI, c) - 1.0).abs() < 1e-14);
        assert!((to_internal(M_E_SI, MASS) - 1.0).abs() < 1e-14);
        assert!((to_internal(EPS0_SI, eps0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn charge_is_sqrt_four_pi_alpha() {
        let e = to_internal(E_CHARGE_SI, CHARGE);
        let expected = (4.0 * std::f64::consts::PI * ALPHA_FS).sqrt();
        assert!((e / expected - 1.0).abs() < 1e-13);
        // CODATA 2018 eps0 is itself rounded, so agreement is at the 1e-9 level
        assert!((ALPHA_FS / 7.297_352_569_3e-3 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rest_energy_and_compton_length() {
        assert!((to_si(1.0, ENERGY) / (M_E_SI * C_SI * C_SI) - 1.0).abs() < 1e-14);
        assert!((to_si(1.0, LENGTH) / (HBAR_SI / (M_E_SI * C_SI)) - 1.0).abs() < 1e-14);
    }
}
