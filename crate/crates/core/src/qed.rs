//! QED route to the Casimir momentum: photon k-integral kernels, the
//! transverse momentum (closed form and Fock-space resolvent evaluation),
//! the longitudinal momentum, orientation averages and the combined report.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_basis, hamiltonian, momentum_op, position_op, FockBasis, HamiltonianTerms, OperatorMatrix};
use crate::params::{anisotropy, ModelParams};
use crate::perturbation::{expectation, ground_state_analytic, ground_state_iterative};
use crate::quadrature::{gauss_legendre, integrate, integrate_scalar, AdaptiveOptions};
use crate::response::ResponseModel;
use crate::semiclassical::sc_momentum_closed;
use crate::solver::{dot, project_out, solve, CVec, CgOptions, Shifted};

type C = Complex64;

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn omega_product(p: &ModelParams) -> f64 {
    p.omega[0] * p.omega[1] * p.omega[2]
}

// ---------------------------------------------------------------------------
// k-integral kernels

/// Photon-plus-recoil energy of an intermediate state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// hbar^2 k^2 / 2m + hbar c k.
    #[default]
    Full,
    /// hbar^2 k^2 / 2m only.
    RecoilOnly,
}

impl Dispersion {
    pub fn energy(&self, k: f64, mass: f64, p: &ModelParams) -> f64 {
        let recoil = p.hbar * p.hbar * k * k / (2.0 * mass);
        match self {
            Dispersion::Full => recoil + p.hbar * p.c * k,
            Dispersion::RecoilOnly => recoil,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dispersion::Full => "full",
            Dispersion::RecoilOnly => "recoil_only",
        }
    }
}

/// Transition energies E0 - E_I of two intermediate states and the recoil mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelArgs {
    pub e1: f64,
    pub e2: f64,
    pub mass: f64,
    pub k_max: Option<f64>,
}

impl KernelArgs {
    pub fn new(e1: f64, e2: f64, mass: f64) -> Self {
        KernelArgs { e1, e2, mass, k_max: None }
    }

    fn check(&self) -> Result<()> {
        if !(self.e1 < 0.0 && self.e2 < 0.0) {
            return Err(Error::NonNegativeTransitionEnergy { e1: self.e1, e2: self.e2 });
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::NonPositiveInput { name: "mass", value: self.mass });
        }
        if let Some(k) = self.k_max {
            if !(k > 0.0) {
                return Err(Error::NonPositiveInput { name: "k_max", value: k });
            }
        }
        Ok(())
    }
}

/// Integrand k^3 [1/((E_k-E1)(E_k-E2)^2) + 1/((E_k-E2)(E_k-E1)^2)] at photon energy `ek`.
fn kernel_integrand(k: f64, ek: f64, e1: f64, e2: f64) -> f64 {
    let (d1, d2) = (ek - e1, ek - e2);
    k * k * k * (1.0 / (d1 * d2 * d2) + 1.0 / (d2 * d1 * d1))
}

/// Decade boundaries of ln k between `lo` and `hi`.
fn log_panels(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let n = ((b - a) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Adaptive evaluation of the kernel integral in ln k. The piece below the
/// lower limit is added from the k^3 behaviour at the origin and, without a
/// cutoff, the recoil-dominated tail 1/(a^3 K^2) (a = hbar^2/2m) above the
/// upper limit.
pub fn kernel_integral_numeric(a: &KernelArgs, disp: Dispersion, p: &ModelParams) -> Result<f64> {
    a.check()?;
    let (emin, emax) = (a.e1.abs().min(a.e2.abs()), a.e1.abs().max(a.e2.abs()));
    let recoil = |e: f64| (2.0 * a.mass * e).sqrt() / p.hbar;
    let mut lo = recoil(emin);
    let mut hi = recoil(emax);
    if disp == Dispersion::Full {
        lo = lo.min(emin / (p.hbar * p.c));
        hi = hi.max(a.mass * p.c / p.hbar);
    }
    let k_lo = 1e-6 * lo;
    let k_hi = a.k_max.unwrap_or(1e8 * hi);
    if a.k_max.is_some_and(|k| k <= k_lo) {
        return Ok(kernel_integrand(1.0, 0.0, a.e1, a.e2) * k_hi.powi(4) / 4.0);
    }
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-12, max_panels: 4000 };
    let (body, _) = integrate_scalar(
        |u| {
            let k = u.exp();
            k * kernel_integrand(k, disp.energy(k, a.mass, p), a.e1, a.e2)
        },
        &log_panels(k_lo, k_hi),
        opts,
    )?;
    let head = kernel_integrand(1.0, 0.0, a.e1, a.e2) * k_lo.powi(4) / 4.0;
    let tail = match a.k_max {
        Some(_) => 0.0,
        None => {
            let ah = p.hbar * p.hbar / (2.0 * a.mass);
            1.0 / (ah.powi(3) * k_hi * k_hi)
        }
    };
    Ok(head + body + tail)
}

/// ln(E1/E2)/(E1 - E2), continuous through E1 = E2.
fn log_ratio_quotient(e1: f64, e2: f64) -> f64 {
    let d = e1 / e2 - 1.0;
    let q = if d.abs() < 1e-8 { 1.0 - 0.5 * d + d * d / 3.0 } else { d.ln_1p() / d };
    q / e2
}

/// Closed form 2 m^2 ln(E1/E2) / (hbar^4 (E1 - E2)) exactly as quoted for the
/// kernel. For negative energies it is negative, whereas the integral is
/// positive; see `kernel_integral_recoil` for the exact recoil-only value.
pub fn kernel_integral_log(a: &KernelArgs, p: &ModelParams) -> f64 {
    2.0 * a.mass * a.mass / p.hbar.powi(4) * log_ratio_quotient(a.e1, a.e2)
}

/// Exact kernel integral for recoil-only dispersion and no cutoff,
/// 2 m^2 ln(E1/E2) / (hbar^4 (E2 - E1)).
pub fn kernel_integral_recoil(a: &KernelArgs, p: &ModelParams) -> Result<f64> {
    a.check()?;
    Ok(-kernel_integral_log(a, p))
}

// ---------------------------------------------------------------------------
// Closed forms

/// (20736 ln(4/3) - 12928 ln 2 - 14511) / 93312.
pub fn perp_bracket() -> f64 {
    (20736.0 * (4.0f64 / 3.0).ln() - 12928.0 * std::f64::consts::LN_2 - 14511.0) / 93312.0
}

/// The rounded transverse constant -1.06/144 quoted alongside the bracket.
pub const PERP_QUOTED: f64 = -1.06 / 144.0;

/// C e^3 M_xyz / (pi^2 c eps0 m_e^2 w_x w_y w_z): the transverse scale.
pub fn perp_scale(p: &ModelParams) -> f64 {
    let m = anisotropy(p).m_xyz;
    p.chiral_c * p.e.powi(3) * m / (PI * PI * p.c * p.eps0 * p.m_e * p.m_e * omega_product(p))
}

/// Orientation-averaged transverse momentum from the exact bracket.
pub fn p_perp_rot(p: &ModelParams) -> Vector3<f64> {
    p.b0 * (perp_bracket() * perp_scale(p))
}

/// Molecular-frame response tensor of the longitudinal momentum, P = T B0.
/// Only the diagonal is populated: component i multiplies B0^i.
pub fn p_par_tensor(p: &ModelParams) -> Matrix3<f64> {
    let eta = anisotropy(p).eta;
    let w = p.omega;
    let k = p.chiral_c * p.e.powi(3) * (p.m_n / p.m_e).ln()
        / (96.0 * PI * PI * p.c * p.eps0 * p.mu * p.mu_star * p.omega_sum);
    let mut t = Matrix3::zeros();
    for i in 0..3 {
        let mut s = 0.0;
        for j in 0..3 {
            for kk in 0..3 {
                let e = levi_civita(i, j, kk);
                if e != 0.0 {
                    s += e * eta[kk][j] / (w[kk] * w[j]);
                }
            }
        }
        t[(i, i)] = k * s;
    }
    t
}

/// Longitudinal momentum at fixed orientation, B0 given in the molecular frame.
pub fn p_par_fixed(p: &ModelParams) -> Vector3<f64> {
    p_par_tensor(p) * p.b0
}

/// C e^3 ln(m_e/m_N) M_xyz / (144 pi^2 c eps0 mu mu* w_x w_y w_z).
pub fn par_rot_coefficient(p: &ModelParams) -> f64 {
    let m = anisotropy(p).m_xyz;
    p.chiral_c * p.e.powi(3) * (p.m_e / p.m_n).ln() * m
        / (144.0 * PI * PI * p.c * p.eps0 * p.mu * p.mu_star * omega_product(p))
}

pub fn p_par_rot(p: &ModelParams) -> Vector3<f64> {
    p.b0 * par_rot_coefficient(p)
}

/// Quoted combined total, with [ln(m_e/m_N) + 1].
pub fn p_total_quoted(p: &ModelParams) -> Vector3<f64> {
    let m = anisotropy(p).m_xyz;
    let k = p.chiral_c * p.e.powi(3) * ((p.m_e / p.m_n).ln() + 1.0) * m
        / (144.0 * PI * PI * p.c * p.eps0 * p.mu * p.mu_star * omega_product(p));
    p.b0 * k
}

/// Chiral length beta(0)/alpha_E(0) = -hbar C M_xyz / (8 mu mu* w0^3).
pub fn chiral_length(p: &ModelParams) -> f64 {
    let m = ResponseModel::new(p);
    let alpha_e0 = p.e * p.e / (p.mu * p.omega_0 * p.omega_0);
    m.beta_static() / alpha_e0
}

/// Optical form (2 alpha / 9 pi)(beta(0)/alpha_E(0)) [ln(m_N/m_e) + 1] e B0.
pub fn p_cas_optical(p: &ModelParams) -> Vector3<f64> {
    let k = 2.0 * p.alpha_fs / (9.0 * PI) * chiral_length(p) * ((p.m_n / p.m_e).ln() + 1.0) * p.e;
    p.b0 * k
}

// ---------------------------------------------------------------------------
// Orientation averages

/// Product quadrature over Euler angles (z-y-z): `n` Gauss points in cos(beta)
/// and `2n` equally spaced points in each of alpha and gamma. Integrands that
/// are polynomials of degree < n in the rotation matrix are integrated exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct So3Grid {
    pub n: usize,
    /// Allowed change under refinement (n -> 2n), relative to the largest sample.
    pub tol: f64,
}

impl Default for So3Grid {
    fn default() -> Self {
        So3Grid { n: 6, tol: 1e-10 }
    }
}

fn euler_rotation(alpha: f64, beta: f64, gamma: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), alpha)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), beta)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), gamma)
}

/// Plain product-grid average and the largest sampled norm.
fn grid_average<F: Fn(&Rotation3<f64>) -> Vector3<f64>>(f: &F, n: usize) -> (Vector3<f64>, f64) {
    let (x, w) = gauss_legendre(n);
    let m = 2 * n;
    let mut acc = Vector3::zeros();
    let mut peak = 0.0f64;
    for (cb, wb) in x.iter().zip(&w) {
        let beta = cb.clamp(-1.0, 1.0).acos();
        for ia in 0..m {
            let alpha = 2.0 * PI * ia as f64 / m as f64;
            for ig in 0..m {
                let gamma = 2.0 * PI * ig as f64 / m as f64;
                let v = f(&euler_rotation(alpha, beta, gamma));
                peak = peak.max(v.norm());
                acc += v * (wb / 2.0);
            }
        }
    }
    (acc / (m * m) as f64, peak)
}

/// Haar average of an orientation-dependent vector; the grid is refined once
/// and the change must stay below `grid.tol` times the largest sample.
pub fn rotational_average<F: Fn(&Rotation3<f64>) -> Vector3<f64>>(f: F, grid: So3Grid) -> Result<Vector3<f64>> {
    if grid.n == 0 || !(grid.tol > 0.0) {
        return Err(Error::InvalidQuadrature(format!("orientation grid n = {}, tol = {}", grid.n, grid.tol)));
    }
    let (coarse, peak) = grid_average(&f, grid.n);
    let (fine, _) = grid_average(&f, 2 * grid.n);
    let delta = (fine - coarse).norm();
    if delta > grid.tol * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::GridTooCoarse { delta });
    }
    Ok(fine)
}

/// Average of the lab-frame response R T R^T b over orientations.
pub fn rotational_average_tensor(t: &Matrix3<f64>, b: &Vector3<f64>, grid: So3Grid) -> Result<Vector3<f64>> {
    rotational_average(|r| r * (t * (r.inverse() * b)), grid)
}

/// The trace/3 shortcut for a linear-response tensor.
pub fn rotational_average_trace(t: &Matrix3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    b * (t.trace() / 3.0)
}

/// Exact check of the longitudinal trace on rational frequencies.
///
/// The trace of the molecular-frame tensor is proportional to
/// S = w_x eta^{zy} + w_y eta^{xz} + w_z eta^{yx}. With w_i = wbar (1 + t d_i)
/// and wbar the mean, `series` holds the Taylor coefficients of S/wbar in t
/// up to t^4 and `cubic_reference` those of -(w_x + w_y + w_z) M_xyz / wbar.
/// `identity_residual` is S + (w_x + w_y + w_z) M_xyz at t = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceExpansion {
    pub series: Vec<BigRational>,
    pub cubic_reference: Vec<BigRational>,
    pub identity_residual: BigRational,
}

impl TraceExpansion {
    /// Largest |coefficient| at orders 1 and 2 (zero when they cancel).
    pub fn low_order_max(&self) -> BigRational {
        self.series[1].abs().max(self.series[2].abs())
    }
}

const SERIES_ORDER: usize = 5;

fn s_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); SERIES_ORDER];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j < SERIES_ORDER {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn s_linear(c0: BigRational, c1: BigRational) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); SERIES_ORDER];
    v[0] = c0;
    v[1] = c1;
    v
}

/// eta^{ij}(t) = t (d_i - d_j) / (2 + t (d_i + d_j)) as a truncated series.
fn s_eta(di: &BigRational, dj: &BigRational) -> Vec<BigRational> {
    let two = BigRational::from_integer(BigInt::from(2));
    let s = di + dj;
    // 1/(2 + s t) = sum_n (-s)^n t^n / 2^(n+1)
    let mut recip = vec![BigRational::zero(); SERIES_ORDER];
    let mut term = BigRational::from_integer(BigInt::from(1)) / &two;
    for r in recip.iter_mut() {
        *r = term.clone();
        term = -(term * &s) / &two;
    }
    s_mul(&s_linear(BigRational::zero(), di - dj), &recip)
}

pub fn trace_expansion_exact(omega: &[BigRational; 3]) -> Result<TraceExpansion> {
    if omega.iter().any(|w| !w.is_positive()) {
        return Err(Error::NonPositiveInput { name: "omega", value: f64::NAN });
    }
    let three = BigRational::from_integer(BigInt::from(3));
    let one = BigRational::from_integer(BigInt::from(1));
    let wbar = (&omega[0] + &omega[1] + &omega[2]) / &three;
    let d: Vec<BigRational> = omega.iter().map(|w| w / &wbar - &one).collect();
    let eta = |i: usize, j: usize| s_eta(&d[i], &d[j]);
    let w = |i: usize| s_linear(one.clone(), d[i].clone());
    let mut series = vec![BigRational::zero(); SERIES_ORDER];
    for (i, (a, b)) in [(0, (2, 1)), (1, (0, 2)), (2, (1, 0))] {
        let term = s_mul(&w(i), &eta(a, b));
        for (s, t) in series.iter_mut().zip(term) {
            *s += t;
        }
    }
    let m = s_mul(&s_mul(&eta(2, 1), &eta(1, 0)), &eta(0, 2));
    let sum_w = s_linear(three.clone(), &d[0] + &d[1] + &d[2]);
    let cubic_reference: Vec<BigRational> = s_mul(&sum_w, &m).into_iter().map(|x| -x).collect();

    let ex = |i: usize, j: usize| (&omega[i] - &omega[j]) / (&omega[i] + &omega[j]);
    let s_exact = &omega[0] * ex(2, 1) + &omega[1] * ex(0, 2) + &omega[2] * ex(1, 0);
    let m_exact = ex(2, 1) * ex(1, 0) * ex(0, 2);
    let identity_residual = s_exact + (&omega[0] + &omega[1] + &omega[2]) * m_exact;
    Ok(TraceExpansion { series, cubic_reference, identity_residual })
}

// ---------------------------------------------------------------------------
// Fock-space resolvent route

/// Numerical settings for the resolvent evaluation of the transverse momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FockSpec {
    pub n_max: usize,
    /// Dimensionless step in curlyC and curlyB for the mixed difference.
    pub fd_step: f64,
    pub dispersion: Dispersion,
    /// Optional photon cutoff (internal units of inverse length).
    pub k_max: Option<f64>,
    /// Decades of ln k below the lowest and above the highest natural scale.
    pub decades_below: f64,
    pub decades_above: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub cg_rel_tol: f64,
    /// Also evaluate the dropped (r x k).B0 denominator term.
    pub doppler_zeeman_check: bool,
}

impl Default for FockSpec {
    fn default() -> Self {
        FockSpec {
            n_max: 10,
            fd_step: 1e-3,
            dispersion: Dispersion::Full,
            k_max: None,
            decades_below: 3.0,
            decades_above: 4.0,
            rel_tol: 1e-9,
            max_panels: 400,
            cg_rel_tol: 1e-12,
            doppler_zeeman_check: false,
        }
    }
}

impl FockSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidQuadrature(m));
        if self.n_max < 2 {
            return bad(format!("n_max = {} is too small", self.n_max));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return bad(format!("fd_step = {} outside (0, 0.1)", self.fd_step));
        }
        if !(self.rel_tol > 0.0 && self.cg_rel_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.decades_below >= 0.0 && self.decades_above >= 0.0) {
            return bad("decade padding must be non-negative".into());
        }
        if self.k_max.is_some_and(|k| !(k > 0.0)) {
            return bad("k_max must be positive".into());
        }
        Ok(())
    }
}

/// One perturbed ground state with its vertex vectors.
struct Sample {
    h: OperatorMatrix,
    diag: Vec<f64>,
    e0: f64,
    omega: CVec,
    /// (p + (e/2) B x r)_j |Omega>, ground-state component removed.
    vertex: [CVec; 3],
    /// |<Omega|V_j|Omega>|, zero by symmetry.
    vertex_mean: f64,
    /// (mu / 2 mu*) (B x r)_b, for the Doppler-Zeeman check.
    dz: Option<[OperatorMatrix; 3]>,
}

struct Operators {
    basis: FockBasis,
    p: [OperatorMatrix; 3],
    r: [OperatorMatrix; 3],
}

fn cross_op(ops: &Operators, b: &Vector3<f64>, scale: f64, comp: usize) -> OperatorMatrix {
    // (B x r)_comp = sum eps_{comp k l} B_k r_l
    let mut terms = Vec::new();
    for k in 0..3 {
        for l in 0..3 {
            let e = levi_civita(comp, k, l);
            if e != 0.0 && b[k] != 0.0 {
                terms.push((C::new(scale * e * b[k], 0.0), &ops.r[l]));
            }
        }
    }
    OperatorMatrix::linear_combination(&ops.basis, &terms)
}

fn build_sample(ops: &Operators, p: &ModelParams, with_dz: bool) -> Result<Sample> {
    let h = hamiltonian(&ops.basis, p, HamiltonianTerms::DRESSED);
    let gs = ground_state_iterative(&h, &ops.basis, p)?;
    let omega = gs.state.amplitudes().to_vec();
    let mut vertex: [CVec; 3] = Default::default();
    let mut vertex_mean = 0.0f64;
    for j in 0..3 {
        let mut v = ops.p[j].apply(&omega);
        let bxr = cross_op(ops, &p.b0, 0.5 * p.e, j).apply(&omega);
        v.iter_mut().zip(&bxr).for_each(|(a, b)| *a += b);
        vertex_mean = vertex_mean.max(dot(&omega, &v).norm());
        project_out(&mut v, &omega);
        vertex[j] = v;
    }
    let dz = with_dz.then(|| [0, 1, 2].map(|b| cross_op(ops, &p.b0, p.mu / (2.0 * p.mu_star), b)));
    let diag = h.diagonal().iter().map(|d| d.re).collect();
    Ok(Sample { h, diag, e0: gs.energy, omega, vertex, vertex_mean, dz })
}

type Amplitudes = [[[C; 3]; 3]; 3];

/// m[i][j][b] = <Omega|V_i G^2 X_b G V_j|Omega> with G = (E_k - E~0 + H~0)^-1.
fn vertex_amplitudes(x: &[OperatorMatrix; 3], u: &[CVec; 3], w: &[CVec; 3]) -> Amplitudes {
    let mut m = [[[C::new(0.0, 0.0); 3]; 3]; 3];
    for b in 0..3 {
        for j in 0..3 {
            let xu = x[b].apply(&u[j]);
            for i in 0..3 {
                m[i][j][b] = dot(&w[i], &xu);
            }
        }
    }
    m
}

/// Angular integral of khat_c khat_b (delta_ij - khat_i khat_j) m[i][j][b]:
/// (4 pi/15)(4 sum_i m_ii,c - sum_b m_cb,b - sum_b m_bc,b), real part.
fn angular_reduce(m: &Amplitudes) -> Vector3<f64> {
    Vector3::from_fn(|c, _| {
        let mut f = C::new(0.0, 0.0);
        for i in 0..3 {
            f += 4.0 * m[i][i][c] - m[c][i][i] - m[i][c][i];
        }
        4.0 * PI / 15.0 * f.re
    })
}

/// Resolvent vectors u_j = G V_j Omega and w_j = G u_j.
fn resolvent_vectors(s: &Sample, ek: f64, cg: CgOptions) -> Result<([CVec; 3], [CVec; 3])> {
    let a = Shifted { h: &s.h, shift: ek - s.e0 };
    let mut u: [CVec; 3] = Default::default();
    let mut w: [CVec; 3] = Default::default();
    for j in 0..3 {
        u[j] = solve(&a, &s.diag, &s.vertex[j], Some(&s.omega), cg)?.0;
        w[j] = solve(&a, &s.diag, &u[j], Some(&s.omega), cg)?.0;
    }
    Ok((u, w))
}

/// Angular-reduced transverse density for one sample at photon energy `ek`,
/// with the momentum vertex and with the Doppler-Zeeman vertex (when present).
fn sample_density(ops: &Operators, s: &Sample, ek: f64, cg: CgOptions) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let (u, w) = resolvent_vectors(s, ek, cg)?;
    let main = angular_reduce(&vertex_amplitudes(&ops.p, &u, &w));
    let extra = match &s.dz {
        Some(dz) => angular_reduce(&vertex_amplitudes(dz, &u, &w)),
        None => Vector3::zeros(),
    };
    Ok((main, extra))
}

/// Transverse response extracted from the resolvent route.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FockTransverse {
    /// d^2 P_c / dC dB_a stored at (c, a): P = C T B0 at fixed orientation.
    pub tensor: Matrix3<f64>,
    /// Same for the dropped Doppler-Zeeman denominator term, when requested.
    pub doppler_zeeman: Option<Matrix3<f64>>,
    /// C T B0 for the supplied parameters (B0 in the molecular frame).
    pub fixed: Vector3<f64>,
    /// C (tr T / 3) B0.
    pub rotational: Vector3<f64>,
    /// tr T/3 in units of `perp_scale / C`, comparable with `perp_bracket`.
    pub coefficient: f64,
    pub max_vertex_mean: f64,
    pub k_range: (f64, f64),
    pub panels: usize,
    pub error: f64,
    pub settings: FockSpec,
}

/// Transverse momentum by resolvent solves in the truncated Fock space.
///
/// The O(C B0) part is isolated by mixed central differences of step
/// `fd_step` in curlyC and in curlyB along each axis (twelve perturbed ground
/// states); the k integral runs in ln k with decade panels.
pub fn p_perp_fock(p: &ModelParams, spec: &FockSpec) -> Result<FockTransverse> {
    spec.validate()?;
    let basis = build_basis(spec.n_max)?;
    let ops = Operators {
        p: [0, 1, 2].map(|a| momentum_op(&basis, a, p)),
        r: [0, 1, 2].map(|a| position_op(&basis, a, p)),
        basis,
    };
    let h = spec.fd_step;
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let mut configs = Vec::new();
    for axis in 0..3 {
        for &(sc, sb) in &signs {
            let mut cb = [0.0; 3];
            cb[axis] = sb * h;
            configs.push(p.with_dimensionless(sc * h, cb));
        }
    }
    let samples: Vec<Sample> =
        configs.par_iter().map(|q| build_sample(&ops, q, spec.doppler_zeeman_check)).collect::<Result<_>>()?;
    let max_vertex_mean = samples.iter().fold(0.0f64, |m, s| m.max(s.vertex_mean));
    let c_h = p.chiral_c_for(h);
    let b_h: [f64; 3] = [0, 1, 2].map(|a| p.b_component_for(a, h));

    let wmin = p.omega.iter().cloned().fold(f64::INFINITY, f64::min);
    let wmax = p.omega.iter().cloned().fold(0.0, f64::max);
    let recoil = |w: f64| (2.0 * p.m_e * p.hbar * w).sqrt() / p.hbar;
    let (mut lo, mut hi) = (recoil(wmin), recoil(10.0 * wmax));
    if spec.dispersion == Dispersion::Full {
        lo = lo.min(wmin / p.c);
        hi = hi.max(p.m_e * p.c / p.hbar);
    }
    let k_lo = lo * 10f64.powf(-spec.decades_below);
    let k_hi = spec.k_max.unwrap_or(hi * 10f64.powf(spec.decades_above));
    if k_hi <= k_lo {
        return Err(Error::InvalidQuadrature(format!("k range [{k_lo:e}, {k_hi:e}] is empty")));
    }
    let pref = p.e * p.e * p.hbar.powi(3) / (p.c * p.m_e.powi(3) * p.eps0 * (2.0 * PI).powi(3));
    let cg = CgOptions { rel_tol: spec.cg_rel_tol, max_iter: 5000 };
    let ndim = if spec.doppler_zeeman_check { 18 } else { 9 };
    let mut failure: Option<Error> = None;
    let integrand = |u: f64| -> Vec<f64> {
        let k = u.exp();
        let ek = spec.dispersion.energy(k, p.m_e, p);
        let dens: Result<Vec<(Vector3<f64>, Vector3<f64>)>> =
            samples.par_iter().map(|s| sample_density(&ops, s, ek, cg)).collect();
        let dens = match dens {
            Ok(d) => d,
            Err(e) => {
                failure.get_or_insert(e);
                return vec![0.0; ndim];
            }
        };
        let w = pref * k.powi(4);
        let mut out = vec![0.0; ndim];
        for a in 0..3 {
            let q = &dens[4 * a..4 * a + 4];
            let norm_ab = w / (4.0 * c_h * b_h[a]);
            for c in 0..3 {
                out[3 * c + a] = norm_ab * (q[0].0[c] - q[1].0[c] - q[2].0[c] + q[3].0[c]);
                if ndim == 18 {
                    out[9 + 3 * c + a] = norm_ab * (q[0].1[c] - q[1].1[c] - q[2].1[c] + q[3].1[c]);
                }
            }
        }
        out
    };
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: spec.rel_tol, max_panels: spec.max_panels };
    let res = integrate(integrand, &log_panels(k_lo, k_hi), opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let res = res?;
    let tensor = Matrix3::from_fn(|c, a| res.value[3 * c + a]);
    let doppler_zeeman = (ndim == 18).then(|| Matrix3::from_fn(|c, a| res.value[9 + 3 * c + a]));
    let scale = perp_scale(p);
    let coefficient = if scale != 0.0 {
        tensor.trace() / 3.0 * p.chiral_c / scale
    } else {
        // scale vanishes with C; quote per unit C instead
        let unit = perp_scale(&p.with_chiral_c(1.0));
        if unit != 0.0 {
            tensor.trace() / 3.0 / unit
        } else {
            f64::NAN
        }
    };
    Ok(FockTransverse {
        fixed: tensor * p.b0 * p.chiral_c,
        rotational: p.b0 * (p.chiral_c * tensor.trace() / 3.0),
        tensor,
        doppler_zeeman,
        coefficient,
        max_vertex_mean,
        k_range: (k_lo, k_hi),
        panels: res.panels,
        error: res.error,
        settings: spec.clone(),
    })
}

/// Which printed transverse constant a numeric coefficient supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Bracket,
    Quoted,
    Neither,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketVerdict {
    pub bracket: f64,
    pub quoted: f64,
    pub bracket_over_quoted: f64,
    pub numeric: Option<f64>,
    pub numeric_over_bracket: Option<f64>,
    pub numeric_over_quoted: Option<f64>,
    pub supports: Support,
}

/// A constant is supported when the numeric coefficient has its sign and
/// lies within a factor 1.5 of it.
pub fn bracket_verdict(numeric: Option<f64>) -> BracketVerdict {
    let (b, q) = (perp_bracket(), PERP_QUOTED);
    let near = |r: f64| r > 0.0 && r.ln().abs() < 1.5f64.ln();
    let (rb, rq) = (numeric.map(|n| n / b), numeric.map(|n| n / q));
    let supports = match (rb, rq) {
        (Some(rb), Some(rq)) => match (near(rb), near(rq)) {
            (true, false) => Support::Bracket,
            (false, true) => Support::Quoted,
            (true, true) if rb.ln().abs() <= rq.ln().abs() => Support::Bracket,
            (true, true) => Support::Quoted,
            _ => Support::Neither,
        },
        _ => Support::Undecided,
    };
    BracketVerdict {
        bracket: b,
        quoted: q,
        bracket_over_quoted: b / q,
        numeric,
        numeric_over_bracket: rb,
        numeric_over_quoted: rq,
        supports,
    }
}

/// Fock transverse momentum with and without the cutoff k_max = m_e c / hbar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffRobustness {
    pub uncut: f64,
    pub cut: f64,
    pub ratio: f64,
}

pub fn cutoff_robustness(p: &ModelParams, spec: &FockSpec) -> Result<CutoffRobustness> {
    let uncut = p_perp_fock(p, &FockSpec { k_max: None, ..spec.clone() })?.coefficient;
    let kc = p.m_e * p.c / p.hbar;
    let cut = p_perp_fock(p, &FockSpec { k_max: Some(kc), ..spec.clone() })?.coefficient;
    Ok(CutoffRobustness { uncut, cut, ratio: cut / uncut })
}

/// |P_perp_rot| / |P_sc_closed| for the given parameters.
pub fn perp_to_semiclassical_ratio(p: &ModelParams) -> f64 {
    let sc = sc_momentum_closed(p).norm();
    p_perp_rot(p).norm() / sc
}

/// Least-squares slope of ln(ratio) against ln(m_e c^2 / hbar w0) when all
/// three frequencies are rescaled to the given means (anisotropy fixed).
pub fn scaling_exponent(base: &ModelParams, omega_0_values: &[f64]) -> Result<f64> {
    if omega_0_values.len() < 2 {
        return Err(Error::InvalidQuadrature("need at least two frequencies".into()));
    }
    let mut pts = Vec::new();
    for &w0 in omega_0_values {
        let s = w0 / base.omega_0;
        let q = base.with_omega(base.omega.map(|w| w * s))?;
        let x = (q.rest_frequency() / q.omega_0).ln();
        pts.push((x, perp_to_semiclassical_ratio(&q).ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

// ---------------------------------------------------------------------------
// Combined report

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Isotropic average over molecular orientations.
    #[default]
    Averaged,
    /// B0 given in the molecular frame.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum PerpSource {
    #[default]
    Analytic,
    Fock(FockSpec),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ReportOptions {
    pub orientation: Orientation,
    pub perp: PerpSource,
}

/// Projection of two momenta on the field direction and their ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Consistency {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
}

impl Consistency {
    fn along(name: &'static str, lhs: &Vector3<f64>, rhs: &Vector3<f64>, dir: &Vector3<f64>) -> Self {
        Self::scalars(name, lhs.dot(dir), rhs.dot(dir))
    }

    fn scalars(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Consistency { name, lhs, rhs, ratio: (rhs != 0.0).then(|| lhs / rhs) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CasimirReport {
    pub p_perp: Vector3<f64>,
    pub p_par: Vector3<f64>,
    /// P_perp + P_par.
    pub p_total: Vector3<f64>,
    /// Quoted combined form with [ln(m_e/m_N) + 1].
    pub p_total_quoted: Vector3<f64>,
    pub quoted_residual: Vector3<f64>,
    /// Pseudo-momentum, fixed at its zero-field value Q0.
    pub k: Vector3<f64>,
    pub p_kin: Vector3<f64>,
    /// e B0 x <r>.
    pub p_abr: Vector3<f64>,
    pub p_optical: Vector3<f64>,
    pub chiral_length: f64,
    pub perp_method: &'static str,
    pub par_method: &'static str,
    pub consistency: Vec<Consistency>,
    pub verdict: BracketVerdict,
    pub fock: Option<FockTransverse>,
}

impl CasimirReport {
    /// |K - (P_kin + P_total + P_abr)|.
    pub fn ledger_residual(&self) -> f64 {
        (self.k - (self.p_kin + self.p_total + self.p_abr)).norm()
    }
}

/// <r> in the analytic dressed ground state.
pub fn mean_position(p: &ModelParams) -> Result<Vector3<f64>> {
    let state = ground_state_analytic(p)?;
    let basis = build_basis(state.n_max())?;
    let mut r = Vector3::zeros();
    for a in 0..3 {
        r[a] = expectation(&state, &position_op(&basis, a, p))?.re;
    }
    Ok(r)
}

pub fn p_cas_total(p: &ModelParams, opts: &ReportOptions) -> Result<CasimirReport> {
    let (p_par, par_method) = match opts.orientation {
        Orientation::Averaged => (p_par_rot(p), "analytic-rot"),
        Orientation::Fixed => (p_par_fixed(p), "analytic-fixed"),
    };
    let (p_perp, perp_method, fock) = match &opts.perp {
        PerpSource::Analytic => (p_perp_rot(p), "analytic-rot", None),
        PerpSource::Fock(spec) => {
            let f = p_perp_fock(p, spec)?;
            match opts.orientation {
                Orientation::Averaged => (f.rotational, "fock-rot", Some(f)),
                Orientation::Fixed => (f.fixed, "fock-fixed", Some(f)),
            }
        }
    };
    let p_total = p_perp + p_par;
    let quoted = p_total_quoted(p);
    let r = mean_position(p)?;
    let p_abr = (p.b0 * p.e).cross(&r);
    let k = p.q0;
    let p_kin = k - p_total - p_abr;
    let optical = p_cas_optical(p);
    let dir = if p.b0.norm() > 0.0 { p.b0.normalize() } else { Vector3::zeros() };
    let consistency = vec![
        Consistency::along("total_vs_quoted", &p_total, &quoted, &dir),
        Consistency::along("optical_vs_quoted", &optical, &quoted, &dir),
        Consistency::along("optical_vs_total", &optical, &p_total, &dir),
        Consistency::along("perp_vs_par", &p_perp, &p_par, &dir),
        Consistency::scalars("bracket_vs_quoted_constant", perp_bracket(), PERP_QUOTED),
    ];
    let verdict = bracket_verdict(fock.as_ref().map(|f| f.coefficient));
    Ok(CasimirReport {
        p_perp,
        p_par,
        p_total,
        p_total_quoted: quoted,
        quoted_residual: quoted - p_total,
        k,
        p_kin,
        p_abr,
        p_optical: optical,
        chiral_length: chiral_length(p),
        perp_method,
        par_method,
        consistency,
        verdict,
        fock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn base() -> ModelParams {
        let w0 = 1e-4;
        ModelParams::hydrogenic([w0 * (1.0 - 1e-2), w0, w0 * (1.0 + 1.3e-2)])
            .unwrap()
            .with_dimensionless(1e-2, [0.0, 0.0, 1e-2])
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn kernel_log_limit_and_symmetry() {
        let p = base();
        let a = KernelArgs::new(-1.0, -1.0, 1.0);
        assert!(rel(kernel_integral_log(&a, &p), -2.0) < 1e-14);
        let (x, y) = (KernelArgs::new(-0.3, -0.7, 2.0), KernelArgs::new(-0.7, -0.3, 2.0));
        assert!(rel(kernel_integral_log(&x, &p), kernel_integral_log(&y, &p)) < 1e-14);
        let near = KernelArgs::new(-1.0, -1.0 - 1e-10, 1.0);
        assert!(rel(kernel_integral_log(&near, &p), -2.0) < 1e-9);
    }

    #[test]
    fn kernel_rejects_non_negative_energies() {
        let p = base();
        let e = kernel_integral_numeric(&KernelArgs::new(0.0, -1.0, 1.0), Dispersion::Full, &p).unwrap_err();
        assert_eq!(e.code(), "qed.NonNegativeTransitionEnergy");
        assert!(kernel_integral_recoil(&KernelArgs::new(-1.0, 0.5, 1.0), &p).is_err());
    }

    #[test]
    fn recoil_only_kernel_matches_its_closed_form() {
        let p = base();
        for (e1, e2) in [(-1e-4, -2e-4), (-1e-4, -1e-4), (-3e-5, -1e-3)] {
            let a = KernelArgs::new(e1, e2, 1.0);
            let num = kernel_integral_numeric(&a, Dispersion::RecoilOnly, &p).unwrap();
            let exact = kernel_integral_recoil(&a, &p).unwrap();
            assert!(rel(num, exact) < 1e-9, "{num} vs {exact}");
        }
    }

    #[test]
    fn full_kernel_tends_to_rest_energy_scale() {
        // with the photon energy kept the integral saturates at 2 m/(hbar^4 c^2)
        let p = base();
        let mut prev = f64::INFINITY;
        for w0 in [1e-3, 1e-4, 1e-5] {
            let a = KernelArgs::new(-w0, -2.0 * w0, 1.0);
            let v = kernel_integral_numeric(&a, Dispersion::Full, &p).unwrap();
            let d = (v - 2.0).abs();
            assert!(d < prev && d < 0.05, "{v}");
            prev = d;
        }
    }

    #[test]
    fn kernel_mass_scaling_in_recoil_regime() {
        let p = base();
        let a = KernelArgs::new(-1e-4, -2e-4, 1.0);
        let b = KernelArgs { mass: 2.0, ..a };
        let r = kernel_integral_numeric(&b, Dispersion::RecoilOnly, &p).unwrap()
            / kernel_integral_numeric(&a, Dispersion::RecoilOnly, &p).unwrap();
        assert!(rel(r, 4.0) < 1e-9);
    }

    #[test]
    fn kernel_cutoff_lowers_value() {
        let p = base();
        let a = KernelArgs::new(-1e-4, -2e-4, 1.0);
        let full = kernel_integral_numeric(&a, Dispersion::RecoilOnly, &p).unwrap();
        let cut = kernel_integral_numeric(&KernelArgs { k_max: Some(0.01), ..a }, Dispersion::RecoilOnly, &p).unwrap();
        assert!(cut > 0.0 && cut < full);
    }

    #[test]
    fn bracket_constant() {
        let b = 20736.0 * (4.0f64 / 3.0).ln() - 12928.0 * 2f64.ln() - 14511.0;
        assert!(rel(perp_bracket() * 93312.0, b) < 1e-14);
        assert!((perp_bracket() + 0.18761).abs() < 1e-4);
        assert!((PERP_QUOTED * 144.0 + 1.06).abs() < 1e-14);
    }

    #[test]
    fn isotropic_and_achiral_vanish() {
        let iso = ModelParams::hydrogenic([1e-4; 3]).unwrap().with_dimensionless(1e-2, [0.0, 0.0, 1e-2]);
        assert_eq!(p_perp_rot(&iso).norm(), 0.0);
        assert_eq!(p_par_rot(&iso).norm(), 0.0);
        assert_eq!(p_par_fixed(&iso).norm(), 0.0);
        let achiral = base().with_chiral_c(0.0);
        assert_eq!(p_cas_total(&achiral, &ReportOptions::default()).unwrap().p_total.norm(), 0.0);
    }

    #[test]
    fn equal_masses_kill_longitudinal_part() {
        // m_N = m_e is rejected by the Zeeman reduced mass, so set it directly
        let q = base();
        let q = ModelParams { m_n: q.m_e, ..q };
        assert_eq!(p_par_fixed(&q).norm(), 0.0);
        assert_eq!(p_par_rot(&q).norm(), 0.0);
    }

    #[test]
    fn longitudinal_along_z_uses_one_ratio() {
        let p = base();
        let v = p_par_fixed(&p);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        let eta = anisotropy(&p).eta;
        let k = p.chiral_c * p.e.powi(3) * (p.m_n / p.m_e).ln()
            / (96.0 * PI * PI * p.c * p.eps0 * p.mu * p.mu_star * p.omega_sum);
        let expected = k * p.b0[2] * 2.0 * eta[1][0] / (p.omega[1] * p.omega[0]);
        assert!(rel(v[2], expected) < 1e-13);
    }

    #[test]
    fn longitudinal_average_matches_closed_form() {
        let p = base();
        let t = p_par_tensor(&p);
        let quad = rotational_average_tensor(&t, &p.b0, So3Grid::default()).unwrap();
        let trace = rotational_average_trace(&t, &p.b0);
        let closed = p_par_rot(&p);
        let eta = anisotropy(&p).max_eta();
        assert!((quad - closed).norm() <= 5.0 * eta * closed.norm());
        assert!((quad - trace).norm() <= 1e-10 * t.norm() * p.b0.norm());
        // the identity is exact, so the agreement is far better than 5 eta
        assert!((trace - closed).norm() <= 1e-9 * closed.norm());
    }

    #[test]
    fn rotational_average_examples() {
        let v = Vector3::new(0.3, -1.2, 2.0);
        let avg = rotational_average(|_| v, So3Grid::default()).unwrap();
        assert!((avg - v).norm() < 1e-13 * v.norm());
        let avg = rotational_average(|r| r * v, So3Grid::default()).unwrap();
        assert!(avg.norm() < 1e-13 * v.norm());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let f = |r: &Rotation3<f64>| {
            let m = r.matrix();
            Vector3::new(m[(2, 2)].powi(8), 0.0, 0.0)
        };
        let e = rotational_average(f, So3Grid { n: 2, tol: 1e-10 }).unwrap_err();
        assert_eq!(e.code(), "qed.GridTooCoarse");
        let ok = rotational_average(f, So3Grid { n: 8, tol: 1e-10 }).unwrap();
        assert!((ok[0] - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn exact_trace_cancels_below_cubic_order() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        for omega in [[q(99, 100), q(1, 1), q(1013, 1000)], [q(1, 2), q(2, 3), q(5, 4)], [q(7, 1), q(3, 1), q(11, 1)]] {
            let t = trace_expansion_exact(&omega).unwrap();
            assert!(t.series[0].is_zero());
            assert!(t.low_order_max().is_zero());
            assert_eq!(t.series, t.cubic_reference);
            assert!(t.identity_residual.is_zero());
            assert!(!t.series[3].is_zero());
        }
    }

    #[test]
    fn optical_form_reduces_to_quoted_total() {
        let p = base();
        let opt = p_cas_optical(&p);
        let quoted = p_total_quoted(&p);
        // same magnitude structure with w_x w_y w_z -> w0^3 and the sign of the 1 flipped
        let l = (p.m_n / p.m_e).ln();
        let rescale = omega_product(&p) / p.omega_0.powi(3);
        let mapped = quoted * (-(l + 1.0) / (1.0 - l)) * rescale;
        let eta = anisotropy(&p).max_eta();
        assert!((opt - mapped).norm() <= 3.0 * eta * opt.norm());
        assert!(chiral_length(&p).abs() > 0.0);
        assert_eq!(p_cas_optical(&p.with_b0(Vector3::zeros())).norm(), 0.0);
    }

    #[test]
    fn report_ledger_and_start_from_rest() {
        let p = base();
        let r = p_cas_total(&p, &ReportOptions::default()).unwrap();
        assert_eq!(r.p_total, r.p_perp + r.p_par);
        assert_eq!(r.p_kin, -r.p_total - r.p_abr);
        assert!(r.p_abr.norm() <= 1e-12 * r.p_total.norm());
        assert!(r.ledger_residual() <= 1e-15 * r.p_total.norm());
        let q = p.with_q0(Vector3::new(1e-3, 0.0, 2e-3));
        let r = p_cas_total(&q, &ReportOptions::default()).unwrap();
        assert!(r.ledger_residual() <= 1e-15 * r.k.norm());
        assert_eq!(r.verdict.supports, Support::Undecided);
    }

    #[test]
    fn verdict_logic() {
        assert_eq!(bracket_verdict(Some(perp_bracket() * 1.1)).supports, Support::Bracket);
        assert_eq!(bracket_verdict(Some(PERP_QUOTED * 0.9)).supports, Support::Quoted);
        assert_eq!(bracket_verdict(Some(-perp_bracket())).supports, Support::Neither);
        assert!((bracket_verdict(None).bracket_over_quoted - 25.49).abs() < 0.01);
    }

    #[test]
    fn scaling_exponent_is_two() {
        let s = scaling_exponent(&base(), &[1e-5, 1e-4, 1e-3]).unwrap();
        assert!((s - 2.0).abs() < 1e-9, "{s}");
    }

    fn small_spec() -> FockSpec {
        FockSpec { n_max: 5, rel_tol: 1e-7, ..FockSpec::default() }
    }

    #[test]
    fn fock_route_vanishes_without_chirality() {
        let p = base().with_chiral_c(0.0);
        let f = p_perp_fock(&p, &FockSpec { dispersion: Dispersion::RecoilOnly, ..small_spec() }).unwrap();
        assert_eq!(f.fixed.norm(), 0.0);
        assert!(f.max_vertex_mean < 1e-12);
    }

    #[test]
    fn fock_route_response_is_linear_in_field() {
        let p = base();
        let f = p_perp_fock(&p, &FockSpec { dispersion: Dispersion::RecoilOnly, ..small_spec() }).unwrap();
        // B0 along z: the fixed-orientation result is the third column of T
        let col = f.tensor.column(2) * (p.chiral_c * p.b0[2]);
        assert!((f.fixed - col).norm() <= 1e-14 * col.norm());
        let flipped =
            p_perp_fock(&p.with_b0(-p.b0), &FockSpec { dispersion: Dispersion::RecoilOnly, ..small_spec() }).unwrap();
        assert!((flipped.fixed + f.fixed).norm() <= 1e-12 * f.fixed.norm());
        assert!(f.coefficient.is_finite());
    }

    #[test]
    fn angular_reduction_matches_sphere_quadrature() {
        let mut m = [[[C::new(0.0, 0.0); 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for b in 0..3 {
                    let t = (i * 9 + j * 3 + b) as f64;
                    m[i][j][b] = C::new((1.3 * t).sin(), (0.7 * t).cos());
                }
            }
        }
        let (x, wx) = gauss_legendre(12);
        let nphi = 24;
        let mut acc = Vector3::zeros();
        for (ct, wt) in x.iter().zip(&wx) {
            let st = (1.0 - ct * ct).sqrt();
            for ip in 0..nphi {
                let phi = 2.0 * PI * ip as f64 / nphi as f64;
                let k = [st * phi.cos(), st * phi.sin(), *ct];
                for c in 0..3 {
                    let mut f = C::new(0.0, 0.0);
                    for i in 0..3 {
                        for j in 0..3 {
                            let proj = if i == j { 1.0 } else { 0.0 } - k[i] * k[j];
                            for b in 0..3 {
                                f += k[c] * k[b] * proj * m[i][j][b];
                            }
                        }
                    }
                    acc[c] += f.re * wt * 2.0 * PI / nphi as f64;
                }
            }
        }
        assert!((acc - angular_reduce(&m)).norm() < 1e-12 * acc.norm());
    }

    #[test]
    fn resolvent_solves_match_spectral_sum() {
        use nalgebra::{DMatrix, DVector};
        let p = base().with_dimensionless(3e-2, [2e-2, -1e-2, 3e-2]);
        let basis = build_basis(3).unwrap();
        let ops = Operators {
            p: [0, 1, 2].map(|a| momentum_op(&basis, a, &p)),
            r: [0, 1, 2].map(|a| position_op(&basis, a, &p)),
            basis,
        };
        let s = build_sample(&ops, &p, false).unwrap();
        let ek = 0.7 * p.omega_0;
        let cg = CgOptions { rel_tol: 1e-14, max_iter: 5000 };
        let (u, w) = resolvent_vectors(&s, ek, cg).unwrap();
        let m = vertex_amplitudes(&ops.p, &u, &w);
        // dense spectral resolvent on the complement of the ground state
        let dense = s.h.to_dense();
        let herm = (&dense + dense.adjoint()) * C::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        let n = eig.eigenvalues.len();
        let omega = DVector::from_vec(s.omega.clone());
        let mut g = DMatrix::<C>::zeros(n, n);
        for l in 0..n {
            let v = eig.eigenvectors.column(l);
            if v.dotc(&omega).norm() > 0.5 {
                continue;
            }
            let d = 1.0 / (ek - s.e0 + eig.eigenvalues[l]);
            g += v * v.adjoint() * C::new(d, 0.0);
        }
        let pd: Vec<DMatrix<C>> = ops.p.iter().map(|o| o.to_dense()).collect();
        let vd: Vec<DVector<C>> = s.vertex.iter().map(|v| DVector::from_vec(v.clone())).collect();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for b in 0..3 {
                    let x = (&g * &g * &vd[i]).adjoint() * &pd[b] * (&g * &vd[j]);
                    worst = worst.max((x[(0, 0)] - m[i][j][b]).norm());
                    scale = scale.max(x[(0, 0)].norm());
                }
            }
        }
        assert!(worst < 1e-9 * scale, "{worst:e} vs {scale:e}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn closed_forms_are_odd(cc in -1e-2f64..1e-2, cb in -1e-2f64..1e-2, axis in 0usize..3) {
            let mut b = [0.0; 3];
            b[axis] = cb;
            let p = base().with_dimensionless(cc, b);
            let mut nb = [0.0; 3];
            nb[axis] = -cb;
            let pc = base().with_dimensionless(-cc, b);
            let pb = base().with_dimensionless(cc, nb);
            for f in [p_perp_rot as fn(&ModelParams) -> Vector3<f64>, p_par_rot, p_par_fixed, p_cas_optical, p_total_quoted] {
                let v = f(&p);
                prop_assert!((f(&pc) + v).norm() <= 1e-14 * v.norm());
                prop_assert!((f(&pb) + v).norm() <= 1e-14 * v.norm());
            }
        }

        #[test]
        fn trace_identity_on_random_rationals(a in 1i64..200, b in 1i64..200, c in 1i64..200) {
            let q = |n: i64| BigRational::new(BigInt::from(n), BigInt::from(17));
            let t = trace_expansion_exact(&[q(a), q(b), q(c)]).unwrap();
            prop_assert!(t.low_order_max().is_zero());
            prop_assert!(t.identity_residual.is_zero());
            prop_assert!(t.series[4].to_f64().unwrap().is_finite());
        }
    }
}
