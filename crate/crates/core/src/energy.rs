//! Energy bookkeeping of the adiabatic field switch-on: magnetic Lamb
//! energies, the field-switching work and the kinetic-energy balance.
//!
//! The Casimir momentum is linear in the field, P(B) = (T_perp + T_par) B, so
//! every quantity here is built from the two response tensors.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::qed::{p_par_tensor, par_rot_coefficient, perp_bracket, perp_scale, FockTransverse, Orientation};
use crate::response::{PolKind, ResponseModel};

/// Linear response of the Casimir momentum to the field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentumResponse {
    pub perp: Matrix3<f64>,
    pub par: Matrix3<f64>,
}

impl MomentumResponse {
    /// Closed forms. The transverse part only exists orientation-averaged, so
    /// `Fixed` affects the longitudinal tensor alone.
    pub fn analytic(p: &ModelParams, orientation: Orientation) -> Self {
        let perp = Matrix3::identity() * (perp_bracket() * perp_scale(p));
        let par = match orientation {
            Orientation::Averaged => Matrix3::identity() * par_rot_coefficient(p),
            Orientation::Fixed => p_par_tensor(p),
        };
        MomentumResponse { perp, par }
    }

    /// Transverse tensor from the resolvent route.
    pub fn with_fock(p: &ModelParams, fock: &FockTransverse, orientation: Orientation) -> Self {
        let mut r = Self::analytic(p, orientation);
        r.perp = match orientation {
            Orientation::Averaged => Matrix3::identity() * (p.chiral_c * fock.tensor.trace() / 3.0),
            Orientation::Fixed => fock.tensor * p.chiral_c,
        };
        r
    }

    pub fn total(&self) -> Matrix3<f64> {
        self.perp + self.par
    }

    pub fn momentum(&self, b: &Vector3<f64>) -> Vector3<f64> {
        self.total() * b
    }
}

/// -P_par(B) . Q / M.
pub fn lamb_parallel(b: &Vector3<f64>, q: &Vector3<f64>, p: &ModelParams, r: &MomentumResponse) -> f64 {
    -(r.par * b).dot(q) / p.m_total
}

/// -P_perp(B) . Q / M.
pub fn lamb_perp(b: &Vector3<f64>, q: &Vector3<f64>, p: &ModelParams, r: &MomentumResponse) -> f64 {
    -(r.perp * b).dot(q) / p.m_total
}

/// Work of the Lamb energies along B(s) = s B0, s in [0, 1], by the
/// trapezoidal rule. At each step the kinetic momentum is the instantaneous
/// Q0 - P(s B0); the integrand E/|B| d|B| is evaluated per unit field so the
/// origin is regular.
pub fn magnetization_work(
    b0: &Vector3<f64>,
    q0: &Vector3<f64>,
    p: &ModelParams,
    r: &MomentumResponse,
    n_steps: usize,
) -> Result<f64> {
    if n_steps < 2 {
        return Err(Error::RangeError(format!("n_steps = {n_steps} must be at least 2")));
    }
    let pf = r.momentum(b0);
    // E(s B0)/(s |B0|) times d(s|B0|)/ds = -P(B0) . Q(s) / M
    let f = |s: f64| -pf.dot(&(q0 - pf * s)) / p.m_total;
    let h = 1.0 / n_steps as f64;
    let inner: f64 = (1..n_steps).map(|i| f(i as f64 * h)).sum();
    Ok(h * (0.5 * (f(0.0) + f(1.0)) + inner))
}

/// Closed form of the work, P^2/2M - Q0 . P / M with P = P(B0).
pub fn magnetization_work_closed(b0: &Vector3<f64>, q0: &Vector3<f64>, p: &ModelParams, r: &MomentumResponse) -> f64 {
    let pf = r.momentum(b0);
    pf.norm_squared() / (2.0 * p.m_total) - q0.dot(&pf) / p.m_total
}

/// (Q0 - P(B0))^2/2M - Q0^2/2M.
pub fn delta_e_kin(b0: &Vector3<f64>, q0: &Vector3<f64>, p: &ModelParams, r: &MomentumResponse) -> f64 {
    let pf = r.momentum(b0);
    ((q0 - pf).norm_squared() - q0.norm_squared()) / (2.0 * p.m_total)
}

/// -alpha_M(0) |B0|^2, the diamagnetic magnetization energy scale.
pub fn diamagnetic_work(b0: &Vector3<f64>, p: &ModelParams) -> Result<f64> {
    let alpha_m = ResponseModel::new(p).at(PolKind::AlphaM, 0.0)?.re;
    Ok(-alpha_m * b0.norm_squared())
}

/// Total Lamb energy along the field direction at field magnitude `bb`, with
/// the instantaneous kinetic momentum Q0 - P.
fn lamb_total_at(bb: f64, dir: &Vector3<f64>, q0: &Vector3<f64>, p: &ModelParams, r: &MomentumResponse) -> f64 {
    let b = dir * bb;
    let q = q0 - r.momentum(&b);
    lamb_parallel(&b, &q, p, r) + lamb_perp(&b, &q, p, r)
}

/// Vacuum magnetization correction at field magnitude `bb` along `dir`: the
/// shortcut -E/B and the strict form -dE/dB + (B/2) d^2E/dB^2 (central
/// differences of relative step 1e-3; exact for energies quadratic in B).
pub fn vacuum_magnetization(
    bb: f64,
    dir: &Vector3<f64>,
    q0: &Vector3<f64>,
    p: &ModelParams,
    r: &MomentumResponse,
) -> (f64, f64) {
    let e = |x: f64| lamb_total_at(x, dir, q0, p, r);
    // -E/B per unit field, regular at B = 0
    let shortcut = r.momentum(dir).dot(&(q0 - r.momentum(&(dir * bb)))) / p.m_total;
    let h = if bb != 0.0 { 1e-3 * bb.abs() } else { 1e-3 };
    let d1 = (e(bb + h) - e(bb - h)) / (2.0 * h);
    let d2 = (e(bb + h) - 2.0 * e(bb) + e(bb - h)) / (h * h);
    (shortcut, -d1 + 0.5 * bb * d2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyLedger {
    /// Lamb energies at the final field with the final kinetic momentum.
    pub e_lamb_par: f64,
    pub e_lamb_perp: f64,
    pub w_b0: f64,
    pub w_b0_closed: f64,
    pub delta_e_kin: f64,
    pub e_diamag: f64,
    pub delta_m_shortcut: f64,
    pub delta_m_strict: f64,
    /// -integral of the shortcut magnetization over the path (Simpson rule).
    pub delta_m_work: f64,
    pub n_steps: usize,
}

impl EnergyLedger {
    /// |W - Delta E_kin| relative to the larger of the two.
    pub fn balance_residual(&self) -> f64 {
        let s = self.w_b0.abs().max(self.delta_e_kin.abs());
        if s == 0.0 {
            0.0
        } else {
            (self.w_b0 - self.delta_e_kin).abs() / s
        }
    }
}

pub fn energy_ledger(
    b0: &Vector3<f64>,
    q0: &Vector3<f64>,
    p: &ModelParams,
    r: &MomentumResponse,
    n_steps: usize,
) -> Result<EnergyLedger> {
    let pf = r.momentum(b0);
    let q_final = q0 - pf;
    let bb = b0.norm();
    let dir = if bb > 0.0 { b0 / bb } else { Vector3::z() };
    let (delta_m_shortcut, delta_m_strict) = vacuum_magnetization(bb, &dir, q0, p, r);
    // the shortcut magnetization is linear in B, so Simpson's rule is exact
    let m = |x: f64| vacuum_magnetization(x, &dir, q0, p, r).0;
    let delta_m_work = -(bb / 6.0) * (m(0.0) + 4.0 * m(0.5 * bb) + m(bb));
    Ok(EnergyLedger {
        e_lamb_par: lamb_parallel(b0, &q_final, p, r),
        e_lamb_perp: lamb_perp(b0, &q_final, p, r),
        w_b0: magnetization_work(b0, q0, p, r, n_steps)?,
        w_b0_closed: magnetization_work_closed(b0, q0, p, r),
        delta_e_kin: delta_e_kin(b0, q0, p, r),
        e_diamag: diamagnetic_work(b0, p)?,
        delta_m_shortcut,
        delta_m_strict,
        delta_m_work,
        n_steps,
    })
}
