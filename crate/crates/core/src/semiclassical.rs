//! Linear-response route to the Casimir momentum.
//!
//! The momentum is hbar B0/(6 pi^2 eps0 c^5) times the frequency integral of
//! w^4 (xi/2 - gamma/w). That integrand has fifth-order real poles at w0 and
//! 2 w0, so the integral is defined by regularization: either the retarded
//! shift w0^2 -> w0^2 (1 - i eps) followed by extrapolation eps -> 0, or a
//! Hadamard finite part around each pole. Both are provided.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{anisotropy, ModelParams};
use crate::quadrature::{self, AdaptiveOptions};
use crate::response::{PolKind, ResponseModel};

type C = Complex64;

/// Settings of the regularized frequency quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Primary eps ladder (dimensionless, strictly decreasing).
    pub eps_ladder: Vec<f64>,
    /// Independent second ladder used as a cross-check.
    pub eps_ladder_alt: Vec<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Successive extrapolants must agree to this relative accuracy.
    pub extrapolation_tol: f64,
    /// Scale of the map w = s t/(1 - t), in units of w0.
    pub map_scale: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            // geometric ladders 0.5 * 0.75^k and 0.4 * 0.8^k
            eps_ladder: vec![0.5, 0.375, 0.28125, 0.2109375, 0.158203125, 0.11865234375],
            eps_ladder_alt: vec![0.4, 0.32, 0.256, 0.2048, 0.16384, 0.131072],
            abs_tol: 0.0,
            rel_tol: 1e-13,
            max_panels: 4000,
            extrapolation_tol: 1e-5,
            map_scale: 1.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, ladder) in [("eps_ladder", &self.eps_ladder), ("eps_ladder_alt", &self.eps_ladder_alt)] {
            if ladder.len() < 2 {
                return Err(Error::InvalidQuadrature(format!("{name} needs at least two values")));
            }
            if ladder.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::InvalidQuadrature(format!("{name} must be strictly decreasing")));
            }
            if ladder.iter().any(|&e| !(1e-8..1.0).contains(&e)) {
                return Err(Error::InvalidQuadrature(format!("{name} values must lie in [1e-8, 1)")));
            }
        }
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0 && self.extrapolation_tol > 0.0) {
            return Err(Error::InvalidQuadrature("tolerances must be positive".into()));
        }
        if !(self.map_scale > 0.0 && self.map_scale.is_finite()) {
            return Err(Error::InvalidQuadrature("map_scale must be positive".into()));
        }
        if self.max_panels < 2 {
            return Err(Error::InvalidQuadrature("max_panels must be at least 2".into()));
        }
        Ok(())
    }

    fn adaptive(&self) -> AdaptiveOptions {
        AdaptiveOptions { abs_tol: self.abs_tol, rel_tol: self.rel_tol, max_panels: self.max_panels }
    }
}

/// w^4 (xi/2 - gamma/w) at a real frequency.
pub fn sc_integrand(omega: f64, p: &ModelParams) -> Result<f64> {
    let m = ResponseModel::new(p);
    m.at(PolKind::Xi, omega)?;
    Ok(m.nr_integrand(C::new(omega, 0.0), C::new(m.omega_0, 0.0)).re)
}

/// hbar / (6 pi^2 eps0 c^5): converts the frequency integral into momentum per
/// unit field.
pub fn sc_prefactor(p: &ModelParams) -> f64 {
    p.hbar / (6.0 * PI * PI * p.eps0 * p.c.powi(5))
}

/// Re of the integral with w0^2 -> w0^2 (1 - i eps).
///
/// Near the poles the regularized integrand is larger than the integral by
/// roughly 1e4 (0.5/eps)^4, so the accuracy target is taken relative to the
/// integral of |f| and small eps values lose digits to cancellation; this is
/// why the default ladders stop above 0.1.
pub fn sc_integral_regularized(m: &ResponseModel, eps: f64, q: &QuadratureSpec) -> Result<f64> {
    let w0 = m.regularized_omega_0(eps);
    let s = q.map_scale * m.omega_0;
    let f = |t: f64| {
        if t >= 1.0 {
            return vec![0.0, 0.0];
        }
        let w = s * t / (1.0 - t);
        let v = m.nr_integrand(C::new(w, 0.0), w0).re * s / ((1.0 - t) * (1.0 - t));
        vec![v, v.abs()]
    };
    let t_of = |w: f64| w / (s + w);
    let mut points = vec![0.0, t_of(m.omega_0), t_of(2.0 * m.omega_0), 1.0];
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    Ok(quadrature::integrate(f, &points, q.adaptive())?.value[0])
}

/// Regularized integrals along one ladder and their extrapolants in eps^2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderResult {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolants: Vec<f64>,
}

impl LadderResult {
    pub fn value(&self) -> f64 {
        *self.extrapolants.last().unwrap()
    }

    /// |last - previous| extrapolant relative to the result.
    pub fn spread(&self) -> f64 {
        let n = self.extrapolants.len();
        if self.value() == 0.0 {
            return 0.0;
        }
        (self.extrapolants[n - 1] - self.extrapolants[n - 2]).abs() / self.value().abs().max(1e-300)
    }
}

pub fn sc_ladder(m: &ResponseModel, ladder: &[f64], q: &QuadratureSpec) -> Result<LadderResult> {
    let values: Vec<f64> = if m.chiral_c * m.m_xyz == 0.0 {
        vec![0.0; ladder.len()]
    } else {
        ladder.par_iter().map(|&e| sc_integral_regularized(m, e, q)).collect::<Result<_>>()?
    };
    let x2: Vec<f64> = ladder.iter().map(|e| e * e).collect();
    let extrapolants = quadrature::neville_to_zero(&x2, &values);
    Ok(LadderResult { eps: ladder.to_vec(), values, extrapolants })
}

/// Frequency integral from both eps ladders.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScIntegral {
    pub primary: LadderResult,
    pub alternate: LadderResult,
}

impl ScIntegral {
    pub fn value(&self) -> f64 {
        self.primary.value()
    }

    /// Relative disagreement of the two ladders.
    pub fn ladder_discrepancy(&self) -> f64 {
        let (a, b) = (self.primary.value(), self.alternate.value());
        if a == 0.0 && b == 0.0 {
            return 0.0;
        }
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Regularized, extrapolated frequency integral.
pub fn sc_integral_numeric(p: &ModelParams, q: &QuadratureSpec) -> Result<ScIntegral> {
    q.validate()?;
    let m = ResponseModel::new(p);
    let primary = sc_ladder(&m, &q.eps_ladder, q)?;
    let alternate = sc_ladder(&m, &q.eps_ladder_alt, q)?;
    for (name, l) in [("primary", &primary), ("alternate", &alternate)] {
        if l.spread() > q.extrapolation_tol {
            return Err(Error::QuadratureNotConverged(format!(
                "{name} eps ladder: successive extrapolants differ by {:e}",
                l.spread()
            )));
        }
    }
    Ok(ScIntegral { primary, alternate })
}

pub fn sc_momentum_numeric(p: &ModelParams, q: &QuadratureSpec) -> Result<Vector3<f64>> {
    Ok(p.b0 * (sc_prefactor(p) * sc_integral_numeric(p, q)?.value()))
}

/// Hadamard finite part of the frequency integral.
pub fn sc_integral_finite_part(p: &ModelParams, q: &QuadratureSpec) -> Result<f64> {
    let m = ResponseModel::new(p);
    let w0 = C::new(m.omega_0, 0.0);
    let f = |z: C| m.nr_integrand(z, w0);
    quadrature::finite_part_half_line(&f, &[m.omega_0, 2.0 * m.omega_0], q.map_scale * m.omega_0, q.adaptive())
}

pub fn sc_momentum_finite_part(p: &ModelParams, q: &QuadratureSpec) -> Result<Vector3<f64>> {
    Ok(p.b0 * (sc_prefactor(p) * sc_integral_finite_part(p, q)?))
}

/// Natural scale of the frequency integral, e^3 hbar C M / (mu^2 mu*^2 w0).
pub fn sc_integral_scale(p: &ModelParams) -> f64 {
    let m = anisotropy(p).m_xyz;
    p.e.powi(3) * p.hbar * p.chiral_c * m / (p.mu * p.mu * p.mu_star * p.mu_star * p.omega_0)
}

/// Closed-form coefficient of the integral in units of `sc_integral_scale`.
pub const SC_CLOSED_COEFFICIENT: f64 = -6.0 / 1458.0;

/// Exact finite part of the integral in units of `sc_integral_scale`:
/// 1699/810 - 3682 ln 2 / 1215, from partial fractions in w^2.
pub fn sc_exact_finite_part_coefficient() -> f64 {
    1699.0 / 810.0 - 3682.0 * std::f64::consts::LN_2 / 1215.0
}

/// -hbar^2 e^3 C B0 M / (1458 pi^2 c^5 eps0 w0 mu^2 mu*^2).
pub fn sc_momentum_closed(p: &ModelParams) -> Vector3<f64> {
    let m = anisotropy(p).m_xyz;
    let k = -p.hbar * p.hbar * p.e.powi(3) * p.chiral_c * m
        / (1458.0 * PI * PI * p.c.powi(5) * p.eps0 * p.omega_0 * p.mu * p.mu * p.mu_star * p.mu_star);
    p.b0 * k
}

/// Radial q-integral of the fluctuation kernel near the light cone.
///
/// With a Lorentzian of width eps k^2 in q^2 the imaginary part of
/// q^4/(k^2 - q^2 + i eps k^2), integrated over q in [0, 2k], tends to the
/// on-shell value -pi k^3/2 as eps -> 0 (error O(eps)). Returns
/// (finite-width value, on-shell value).
pub fn green_reduction_check(omega: f64, eps: f64, p: &ModelParams) -> Result<(f64, f64)> {
    if !(omega > 0.0) {
        return Err(Error::NonPositiveInput { name: "omega", value: omega });
    }
    if !(eps > 0.0) {
        return Err(Error::NonPositiveInput { name: "eps", value: eps });
    }
    let k = omega / p.c;
    let g = eps * k * k;
    let f = |q: f64| {
        let d = k * k - q * q;
        -q.powi(4) * g / (d * d + g * g)
    };
    let w = (eps.sqrt() * k).min(0.5 * k);
    let pts = [0.0, k - w, k - 0.1 * w, k, k + 0.1 * w, k + w, 2.0 * k];
    let opts = AdaptiveOptions { rel_tol: 1e-12, ..Default::default() };
    let (v, _) = quadrature::integrate_scalar(f, &pts, opts)?;
    Ok((v, -PI * k.powi(3) / 2.0))
}

/// Frequency density of the zero-point mode sum of hbar dn k.
///
/// Each mode carries hbar k/2 of zero-point momentum, shifted by the
/// non-reciprocal index dn = rho alpha_nr / eps0; two polarizations; rho V = 1.
/// The k-direction average of (B0.k) k is done by quadrature on the sphere.
pub fn mode_sum_density(omega: f64, p: &ModelParams) -> Result<Vector3<f64>> {
    let k = omega / p.c;
    let (x, wx) = quadrature::gauss_legendre(8);
    let n_phi = 8;
    let mut acc = Vector3::zeros();
    for (ct, wc) in x.iter().zip(&wx) {
        let st = (1.0 - ct * ct).sqrt();
        for j in 0..n_phi {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
            let khat = Vector3::new(st * phi.cos(), st * phi.sin(), *ct);
            let kv = khat * k;
            let dn = crate::response::delta_n_mch(1.0, &kv, omega, p)?;
            acc += kv * (dn * wc * 2.0 * PI / n_phi as f64);
        }
    }
    // d^3k/(2 pi)^3 = k^2 dk dOmega/(8 pi^3), dk = dw/c
    let polarizations = 2.0;
    Ok(acc * (0.5 * p.hbar * polarizations * k * k / (8.0 * PI.powi(3) * p.c)))
}
