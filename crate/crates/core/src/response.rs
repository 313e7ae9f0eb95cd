//! Rotationally averaged polarizabilities of the chiral oscillator and the
//! induced-dipole constitutive relation built from them.
//!
//! The formulas are leading order in the anisotropy factors. Everything is
//! analytic in both the probe frequency and the mean oscillator frequency, so
//! the evaluators accept complex arguments; the semiclassical module relies on
//! that for its regularized and contour quadratures.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{anisotropy, ModelParams};

type C = Complex64;

/// Relative distance from a pole below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolKind {
    /// Electric polarizability.
    AlphaE,
    /// Magnetic polarizability.
    AlphaM,
    /// Faraday coefficient.
    Chi,
    Zeta,
    /// Rotatory (natural optical activity) factor.
    Beta,
    /// Magnetochiral factors.
    Gamma,
    Xi,
}

impl PolKind {
    pub const ALL: [PolKind; 7] =
        [PolKind::AlphaE, PolKind::AlphaM, PolKind::Chi, PolKind::Zeta, PolKind::Beta, PolKind::Gamma, PolKind::Xi];

    pub fn name(&self) -> &'static str {
        match self {
            PolKind::AlphaE => "alpha_E",
            PolKind::AlphaM => "alpha_M",
            PolKind::Chi => "chi",
            PolKind::Zeta => "zeta",
            PolKind::Beta => "beta",
            PolKind::Gamma => "gamma",
            PolKind::Xi => "xi",
        }
    }

    /// Real frequencies at which the formula is singular.
    pub fn poles(&self, omega_0: f64) -> Vec<f64> {
        match self {
            PolKind::AlphaE | PolKind::Chi => vec![omega_0],
            PolKind::AlphaM => vec![2.0 * omega_0],
            PolKind::Zeta => vec![0.0, 2.0 * omega_0],
            PolKind::Beta | PolKind::Gamma | PolKind::Xi => vec![omega_0, 2.0 * omega_0],
        }
    }
}

/// Parameter combinations entering the polarizabilities, extracted once so
/// that integrands do not recompute the anisotropy set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResponseModel {
    pub e: f64,
    pub hbar: f64,
    pub mu: f64,
    pub mu_star: f64,
    pub chiral_c: f64,
    pub omega_0: f64,
    pub m_xyz: f64,
    pub n_xyz: f64,
}

impl ResponseModel {
    pub fn new(p: &ModelParams) -> Self {
        let a = anisotropy(p);
        ResponseModel {
            e: p.e,
            hbar: p.hbar,
            mu: p.mu,
            mu_star: p.mu_star,
            chiral_c: p.chiral_c,
            omega_0: p.omega_0,
            m_xyz: a.m_xyz,
            n_xyz: a.n_xyz,
        }
    }

    /// Mean frequency continued to w0^2 -> w0^2 (1 - i eps).
    pub fn regularized_omega_0(&self, eps: f64) -> C {
        self.omega_0 * C::new(1.0, -eps).sqrt()
    }

    /// Unguarded evaluation at complex frequency `w` with complex mean
    /// frequency `w0`.
    pub fn eval(&self, kind: PolKind, w: C, w0: C) -> C {
        let (e, hb, mu, ms, cc) = (self.e, self.hbar, self.mu, self.mu_star, self.chiral_c);
        let (w2, w02) = (w * w, w0 * w0);
        match kind {
            PolKind::AlphaE => e * e / (mu * (w02 - w2)),
            PolKind::AlphaM => 4.0 * e * e * hb * w0 * self.n_xyz / (9.0 * ms * ms * (4.0 * w02 - w2)),
            PolKind::Chi => {
                let d = w02 - w2;
                e.powi(3) / (mu * ms * d * d)
            }
            PolKind::Zeta => {
                let d = 4.0 * w02 - w2;
                e.powi(3) * hb * w0 * (4.0 * w02 - 3.0 * w2) * self.n_xyz / (18.0 * ms.powi(3) * w * d * d)
            }
            PolKind::Beta => {
                let num = w2 * w2 + 7.0 * w02 * w2 + 4.0 * w02 * w02;
                -2.0 * e * e * hb * cc * w0 * w02 * num * self.m_xyz / (mu * mu * ms * quartic_cubed(w2, w02))
            }
            PolKind::Gamma => self.gamma_over_omega(w, w0) * w,
            PolKind::Xi => {
                let poly =
                    19.0 * w2 * w2 * w2 - 842.0 * w2 * w2 * w02 - 224.0 * w2 * w02 * w02 - 672.0 * w02 * w02 * w02;
                let d1 = w2 - w02;
                let d2 = w2 - 4.0 * w02;
                -2.0 * e.powi(3) * hb * cc * self.m_xyz * w0 * w02 * w * poly
                    / (15.0 * mu * mu * ms * ms * d1 * d1 * d1 * d2 * d2 * d2 * d2 * d2)
            }
        }
    }

    /// gamma / w, finite at w = 0.
    pub fn gamma_over_omega(&self, w: C, w0: C) -> C {
        let (e, hb, mu, ms, cc) = (self.e, self.hbar, self.mu, self.mu_star, self.chiral_c);
        let (w2, w02) = (w * w, w0 * w0);
        e.powi(3) * hb * cc * w0 * w02 * w * (w2 + 12.0 * w02) * self.m_xyz
            / (mu * mu * ms * ms * quartic_cubed(w2, w02))
    }

    /// Non-reciprocal factor xi/2 - gamma/w.
    pub fn nr_factor(&self, w: C, w0: C) -> C {
        0.5 * self.eval(PolKind::Xi, w, w0) - self.gamma_over_omega(w, w0)
    }

    /// w^4 (xi/2 - gamma/w), the frequency integrand of the semiclassical
    /// Casimir momentum.
    pub fn nr_integrand(&self, w: C, w0: C) -> C {
        let w2 = w * w;
        w2 * w2 * self.nr_factor(w, w0)
    }

    /// Static limit of beta, -e^2 hbar C M / (8 mu^2 mu* w0^5).
    pub fn beta_static(&self) -> f64 {
        -self.e * self.e * self.hbar * self.chiral_c * self.m_xyz
            / (8.0 * self.mu * self.mu * self.mu_star * self.omega_0.powi(5))
    }

    fn guard(&self, kind: PolKind, omega: f64) -> Result<()> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::NonPositiveInput { name: "omega", value: omega });
        }
        for pole in kind.poles(self.omega_0) {
            if (omega - pole).abs() <= POLE_GUARD * self.omega_0 {
                return Err(Error::OnResonance { omega, pole });
            }
        }
        Ok(())
    }

    /// Guarded evaluation at a real frequency.
    pub fn at(&self, kind: PolKind, omega: f64) -> Result<C> {
        self.guard(kind, omega)?;
        Ok(self.eval(kind, C::new(omega, 0.0), C::new(self.omega_0, 0.0)))
    }
}

/// (w^4 - 5 w0^2 w^2 + 4 w0^4)^3
fn quartic_cubed(w2: C, w02: C) -> C {
    let q = w2 * w2 - 5.0 * w02 * w2 + 4.0 * w02 * w02;
    q * q * q
}

/// One polarizability at a real, non-negative frequency.
pub fn polarizability(kind: PolKind, omega: f64, p: &ModelParams) -> Result<C> {
    ResponseModel::new(p).at(kind, omega)
}

/// Polarizability with w0^2 -> w0^2 (1 - i eps); finite on the real axis
/// for eps > 0.
pub fn polarizability_regularized(kind: PolKind, omega: f64, eps: f64, p: &ModelParams) -> C {
    let m = ResponseModel::new(p);
    m.eval(kind, C::new(omega, 0.0), m.regularized_omega_0(eps))
}

fn eps_tensor(v: &Vector3<f64>) -> Matrix3<C> {
    // M_ij = eps_{ikj} v_k, so that M x = v ^ x
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += levi_civita(i, k, j) * v[k];
            }
            m[(i, j)] = C::new(s, 0.0);
        }
    }
    m
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        0.0
    } else if (i, j, k) == (0, 1, 2) || (i, j, k) == (1, 2, 0) || (i, j, k) == (2, 0, 1) {
        1.0
    } else {
        -1.0
    }
}

/// All response data at one frequency and wave vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseSet {
    pub omega: f64,
    pub alpha_e: C,
    pub alpha_m: C,
    pub chi: C,
    /// Singular at omega = 0, reported as `None` there.
    pub zeta: Option<C>,
    pub beta: C,
    pub gamma: C,
    pub xi: C,
    /// gamma / omega, kept separately so the static limit stays finite.
    pub gamma_over_omega: C,
    pub alpha_ee: Matrix3<C>,
    pub alpha_em: Matrix3<C>,
    pub alpha_nr: f64,
}

impl ResponseSet {
    pub fn alpha_me(&self) -> Matrix3<C> {
        -self.alpha_em
    }
}

/// Evaluates every polarizability and the effective tensors at (omega, k).
pub fn response_set(omega: f64, k: &Vector3<f64>, p: &ModelParams) -> Result<ResponseSet> {
    let m = ResponseModel::new(p);
    let w = C::new(omega, 0.0);
    let w0 = C::new(m.omega_0, 0.0);
    let get = |kind| m.at(kind, omega);
    let alpha_e = get(PolKind::AlphaE)?;
    let alpha_m = get(PolKind::AlphaM)?;
    let chi = get(PolKind::Chi)?;
    let zeta = match get(PolKind::Zeta) {
        Ok(z) => Some(z),
        Err(Error::OnResonance { pole: 0.0, .. }) => None,
        Err(e) => return Err(e),
    };
    let beta = get(PolKind::Beta)?;
    let gamma = get(PolKind::Gamma)?;
    let xi = get(PolKind::Xi)?;
    let gamma_over_omega = m.gamma_over_omega(w, w0);
    let b0 = p.b0;
    let bk = b0.dot(k);
    let kc = k.map(|x| C::new(x, 0.0));
    let bc = b0.map(|x| C::new(x, 0.0));
    let eb = eps_tensor(&b0);
    let i = C::i();
    let alpha_ee =
        Matrix3::identity() * (alpha_e + 0.5 * xi * bk) + kc * bc.transpose() * (0.5 * xi) - eb * (i * omega * chi);
    let alpha_em = Matrix3::identity() * (i * omega * beta) + eb * gamma;
    let alpha_nr = ((0.5 * xi - gamma_over_omega) * bk).re;
    Ok(ResponseSet {
        omega,
        alpha_e,
        alpha_m,
        chi,
        zeta,
        beta,
        gamma,
        xi,
        gamma_over_omega,
        alpha_ee,
        alpha_em,
        alpha_nr,
    })
}

pub fn alpha_ee(omega: f64, k: &Vector3<f64>, p: &ModelParams) -> Result<Matrix3<C>> {
    Ok(response_set(omega, k, p)?.alpha_ee)
}

pub fn alpha_em(omega: f64, p: &ModelParams) -> Result<Matrix3<C>> {
    Ok(response_set(omega, &Vector3::zeros(), p)?.alpha_em)
}

pub fn alpha_me(omega: f64, p: &ModelParams) -> Result<Matrix3<C>> {
    Ok(-alpha_em(omega, p)?)
}

fn check_plane_wave(e_free: &Vector3<C>, k: &Vector3<f64>, omega: f64, p: &ModelParams) -> Result<()> {
    if !(omega > 0.0) {
        return Err(Error::NonPositiveInput { name: "omega", value: omega });
    }
    let kc = k.norm() * p.c;
    if ((kc - omega) / omega).abs() > 1e-9 {
        return Err(Error::OffShell { kc, omega });
    }
    let kdot = e_free.iter().zip(k.iter()).map(|(e, k)| e * k).sum::<C>().norm();
    if kdot > 1e-9 * k.norm() * e_free.norm() {
        return Err(Error::NotTransverse(kdot));
    }
    Ok(())
}

/// Induced dipole d = alpha_EE E + alpha_EM B for a free plane wave with
/// B = k ^ E / omega.
///
/// `b_free` must be the magnetic field of that same wave.
pub fn induced_dipole(
    e_free: &Vector3<C>,
    b_free: &Vector3<C>,
    k: &Vector3<f64>,
    omega: f64,
    p: &ModelParams,
) -> Result<Vector3<C>> {
    check_plane_wave(e_free, k, omega, p)?;
    let kc = k.map(|x| C::new(x, 0.0));
    let expected = kc.cross(e_free) / C::new(omega, 0.0);
    let mismatch = (b_free - expected).norm();
    if mismatch > 1e-9 * expected.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Invariant(format!("b_free is not k ^ E / omega (mismatch {mismatch:e})")));
    }
    let r = response_set(omega, k, p)?;
    Ok(r.alpha_ee * e_free + r.alpha_em * b_free)
}

/// Induced dipole written as a response to the free electric field alone:
/// alpha_E E - i w chi B0^E + i beta k^E + alpha_nr E + (xi/2 + gamma/w)(B0.E) k.
pub fn induced_dipole_from_e(e_free: &Vector3<C>, k: &Vector3<f64>, omega: f64, p: &ModelParams) -> Result<Vector3<C>> {
    check_plane_wave(e_free, k, omega, p)?;
    let r = response_set(omega, k, p)?;
    let i = C::i();
    let kc = k.map(|x| C::new(x, 0.0));
    let bc = p.b0.map(|x| C::new(x, 0.0));
    let be: C = bc.iter().zip(e_free.iter()).map(|(b, e)| b * e).sum();
    let bk = p.b0.dot(k);
    Ok(e_free * r.alpha_e - bc.cross(e_free) * (i * omega * r.chi)
        + kc.cross(e_free) * (i * r.beta)
        + e_free * ((0.5 * r.xi - r.gamma_over_omega) * bk)
        + kc * ((0.5 * r.xi + r.gamma_over_omega) * be))
}

/// Non-reciprocal polarizability (xi/2 - gamma/w)(B0.k).
pub fn alpha_nr(k: &Vector3<f64>, omega: f64, p: &ModelParams) -> Result<f64> {
    let m = ResponseModel::new(p);
    m.guard(PolKind::Xi, omega)?;
    let f = m.nr_factor(C::new(omega, 0.0), C::new(m.omega_0, 0.0));
    Ok(f.re * p.b0.dot(k))
}

/// Magnetochiral correction to the refractive index of a dilute medium of
/// number density `rho`.
pub fn delta_n_mch(rho: f64, k: &Vector3<f64>, omega: f64, p: &ModelParams) -> Result<f64> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::NonPositiveInput { name: "rho", value: rho });
    }
    Ok(rho * alpha_nr(k, omega, p)? / p.eps0)
}
