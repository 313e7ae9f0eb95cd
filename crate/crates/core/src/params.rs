//! Physical inputs of the two-particle chiral oscillator and the dimensionless
//! expansion parameters built from them.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, UnitSystem};

/// Raw inputs as they appear in a configuration file.
///
/// In `internal` units masses are in units of m_e (so `m_e`, if given, must be 1),
/// the charge defaults to sqrt(4 pi alpha) and every other quantity is expressed
/// with hbar = c = m_e = eps0 = 1. In `si` units everything is SI and the charge
/// defaults to the elementary charge; `m_e`, if given, must be the electron mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub units: UnitSystem,
    #[serde(default)]
    pub m_e: Option<f64>,
    pub m_n: f64,
    #[serde(default)]
    pub charge: Option<f64>,
    pub chiral_c: f64,
    pub omega: [f64; 3],
    #[serde(default)]
    pub b0: [f64; 3],
    #[serde(default)]
    pub q0: [f64; 3],
}

/// Model parameters in internal units.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub m_e: f64,
    pub m_n: f64,
    /// Magnitude of the chromophore charges (q_e = -e, q_N = +e).
    pub e: f64,
    /// Coefficient of the chiral potential C x y z.
    pub chiral_c: f64,
    pub omega: [f64; 3],
    pub b0: Vector3<f64>,
    pub q0: Vector3<f64>,
    pub hbar: f64,
    pub c: f64,
    pub eps0: f64,
    pub m_total: f64,
    pub mu: f64,
    pub mu_star: f64,
    /// Arithmetic mean of the three frequencies.
    pub omega_0: f64,
    /// Sum of the three frequencies (2 E0 / hbar).
    pub omega_sum: f64,
    pub alpha_fs: f64,
    /// Unit system the parameters were supplied in.
    pub source_units: UnitSystem,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveInput { name, value })
    }
}

fn finite3(name: &'static str, v: [f64; 3]) -> Result<Vector3<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Vector3::from(v))
    } else {
        Err(Error::NonPositiveInput { name, value: f64::NAN })
    }
}

/// Builds internal-unit parameters from raw inputs.
pub fn derive_params(raw: &RawParams) -> Result<ModelParams> {
    use units::*;
    let (m_n, e, chiral_c, omega, b0, q0) = match raw.units {
        UnitSystem::Internal => {
            if let Some(me) = raw.m_e {
                if (me - 1.0).abs() > 1e-15 {
                    return Err(Error::InconsistentUnits(me));
                }
            }
            let e = raw.charge.unwrap_or((4.0 * std::f64::consts::PI * ALPHA_FS).sqrt());
            (raw.m_n, e, raw.chiral_c, raw.omega, raw.b0, raw.q0)
        }
        UnitSystem::Si => {
            if let Some(me) = raw.m_e {
                if (me / M_E_SI - 1.0).abs() > 1e-9 {
                    return Err(Error::InconsistentUnits(to_internal(me, MASS)));
                }
            }
            let conv = |v: [f64; 3], d: Dim| v.map(|x| to_internal(x, d));
            (
                to_internal(raw.m_n, MASS),
                to_internal(raw.charge.unwrap_or(E_CHARGE_SI), CHARGE),
                to_internal(raw.chiral_c, CHIRAL_COUPLING),
                conv(raw.omega, FREQUENCY),
                conv(raw.b0, MAGNETIC_FIELD),
                conv(raw.q0, MOMENTUM),
            )
        }
    };
    let mut p = ModelParams::internal(m_n, e, chiral_c, omega, finite3("b0", b0)?, finite3("q0", q0)?)?;
    p.source_units = raw.units;
    Ok(p)
}

impl ModelParams {
    /// Constructs parameters directly in internal units (m_e = 1).
    pub fn internal(
        m_n: f64,
        e: f64,
        chiral_c: f64,
        omega: [f64; 3],
        b0: Vector3<f64>,
        q0: Vector3<f64>,
    ) -> Result<Self> {
        let m_e = 1.0;
        positive("m_n", m_n)?;
        positive("e", e)?;
        positive("omega_x", omega[0])?;
        positive("omega_y", omega[1])?;
        positive("omega_z", omega[2])?;
        if !chiral_c.is_finite() {
            return Err(Error::NonPositiveInput { name: "chiral_c", value: chiral_c });
        }
        if m_n == m_e {
            return Err(Error::DegenerateMasses);
        }
        if m_n < m_e {
            return Err(Error::NonPositiveInput { name: "m_n - m_e", value: m_n - m_e });
        }
        let m_total = m_n + m_e;
        let mu = m_n * m_e / m_total;
        let mu_star = m_n * m_e / (m_n - m_e);
        let omega_sum = omega[0] + omega[1] + omega[2];
        let (hbar, c, eps0) = (1.0, 1.0, 1.0);
        Ok(ModelParams {
            m_e,
            m_n,
            e,
            chiral_c,
            omega,
            b0,
            q0,
            hbar,
            c,
            eps0,
            m_total,
            mu,
            mu_star,
            omega_0: omega_sum / 3.0,
            omega_sum,
            alpha_fs: e * e / (4.0 * std::f64::consts::PI * eps0 * hbar * c),
            source_units: UnitSystem::Internal,
        })
    }

    /// Hydrogen-like default: m_N = 1836 m_e, physical charge, given frequencies.
    pub fn hydrogenic(omega: [f64; 3]) -> Result<Self> {
        let e = (4.0 * std::f64::consts::PI * units::ALPHA_FS).sqrt();
        Self::internal(1836.0, e, 0.0, omega, Vector3::zeros(), Vector3::zeros())
    }

    pub fn with_chiral_c(&self, chiral_c: f64) -> Self {
        ModelParams { chiral_c, ..self.clone() }
    }

    pub fn with_b0(&self, b0: Vector3<f64>) -> Self {
        ModelParams { b0, ..self.clone() }
    }

    pub fn with_q0(&self, q0: Vector3<f64>) -> Self {
        ModelParams { q0, ..self.clone() }
    }

    pub fn with_omega(&self, omega: [f64; 3]) -> Result<Self> {
        let mut p = Self::internal(self.m_n, self.e, self.chiral_c, omega, self.b0, self.q0)?;
        p.source_units = self.source_units;
        Ok(p)
    }

    pub fn with_m_n(&self, m_n: f64) -> Result<Self> {
        let mut p = Self::internal(m_n, self.e, self.chiral_c, self.omega, self.b0, self.q0)?;
        p.source_units = self.source_units;
        Ok(p)
    }

    /// Chiral coupling that produces the dimensionless value `curly_c`.
    pub fn chiral_c_for(&self, curly_c: f64) -> f64 {
        let [wx, wy, wz] = self.omega;
        curly_c * (2.0 * self.mu).powf(1.5) * self.omega_sum * (wx * wy * wz).sqrt() / self.hbar.sqrt()
    }

    /// Field component along `axis` that produces the dimensionless value `curly_b`.
    pub fn b_component_for(&self, axis: usize, curly_b: f64) -> f64 {
        let (j, k) = ((axis + 1) % 3, (axis + 2) % 3);
        curly_b * 4.0 * self.mu_star * (self.omega[j] * self.omega[k]).sqrt() / self.e
    }

    /// Copy with C and B0 chosen so that the dimensionless parameters equal the
    /// given values.
    pub fn with_dimensionless(&self, curly_c: f64, curly_b: [f64; 3]) -> Self {
        let b0 = Vector3::new(
            self.b_component_for(0, curly_b[0]),
            self.b_component_for(1, curly_b[1]),
            self.b_component_for(2, curly_b[2]),
        );
        ModelParams { chiral_c: self.chiral_c_for(curly_c), b0, ..self.clone() }
    }

    /// Unperturbed ground energy hbar (w_x + w_y + w_z) / 2.
    pub fn e0(&self) -> f64 {
        0.5 * self.hbar * self.omega_sum
    }

    /// Electron rest energy m_e c^2 divided by hbar.
    pub fn rest_frequency(&self) -> f64 {
        self.m_e * self.c * self.c / self.hbar
    }
}

/// Dimensionless anisotropy and coupling parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AnisotropySet {
    /// eta[i][j] = (w_i - w_j)/(w_i + w_j).
    pub eta: [[f64; 3]; 3],
    pub curly_c: f64,
    pub curly_b: [f64; 3],
    /// eta_zy eta_yx eta_xz.
    pub m_xyz: f64,
    /// eta_yx eta_yz + eta_zx eta_zy + eta_xy eta_xz.
    pub n_xyz: f64,
}

impl AnisotropySet {
    pub fn max_eta(&self) -> f64 {
        self.eta.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Largest of |curlyC|, |curlyB^i| and |eta^{ij}|.
    pub fn expansion_size(&self) -> f64 {
        self.curly_b.iter().fold(self.curly_c.abs().max(self.max_eta()), |m, x| m.max(x.abs()))
    }
}

pub fn eta(omega: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                e[i][j] = (omega[i] - omega[j]) / (omega[i] + omega[j]);
            }
        }
    }
    e
}

pub fn m_xyz(eta: &[[f64; 3]; 3]) -> f64 {
    eta[2][1] * eta[1][0] * eta[0][2]
}

pub fn n_xyz(eta: &[[f64; 3]; 3]) -> f64 {
    eta[1][0] * eta[1][2] + eta[2][0] * eta[2][1] + eta[0][1] * eta[0][2]
}

pub fn anisotropy(p: &ModelParams) -> AnisotropySet {
    let [wx, wy, wz] = p.omega;
    let eta = eta(&p.omega);
    let curly_c = p.chiral_c * p.hbar.sqrt() / ((2.0 * p.mu).powf(1.5) * p.omega_sum * (wx * wy * wz).sqrt());
    let mut curly_b = [0.0; 3];
    for (i, cb) in curly_b.iter_mut().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        *cb = p.e * p.b0[i] / (4.0 * p.mu_star * (p.omega[j] * p.omega[k]).sqrt());
    }
    AnisotropySet { m_xyz: m_xyz(&eta), n_xyz: n_xyz(&eta), eta, curly_c, curly_b }
}
