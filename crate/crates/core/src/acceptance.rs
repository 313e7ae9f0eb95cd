//! Acceptance suite shared by `selftest` and the integration tests.
//!
//! Each criterion is evaluated against its stated tolerance and reported as
//! one PASS/FAIL line. Lines carry no timings so repeated runs are
//! byte-identical.

use std::time::{Duration, Instant};

use nalgebra::{Rotation3, Vector3};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_config, SweepSpec};
use crate::energy::{delta_e_kin, magnetization_work, MomentumResponse};
use crate::error::Result;
use crate::params::{anisotropy, ModelParams};
use crate::perturbation::verify_dressing;
use crate::qed::{
    bracket_verdict, kernel_integral_log, kernel_integral_numeric, mean_position, p_cas_optical, p_cas_total,
    p_par_fixed, p_par_rot, p_par_tensor, p_perp_fock, p_perp_rot, perp_bracket, rotational_average_tensor,
    scaling_exponent, trace_expansion_exact, Dispersion, FockSpec, KernelArgs, Orientation, ReportOptions, So3Grid,
    Support,
};
use crate::run::{run, run_rows, with_sweep, LEDGER_TOL};
use crate::semiclassical::{
    sc_integral_numeric, sc_momentum_closed, sc_momentum_numeric, sc_prefactor, QuadratureSpec,
};

const RUNTIME_LIMIT: Duration = Duration::from_secs(60);

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {} [{}]: {status} {}", self.id, self.name, self.detail)
    }
}

pub const CRITERIA: [(u32, &str); 9] = [
    (1, "perturbed-state"),
    (2, "semiclassical-closed-form"),
    (3, "kernel-integrals"),
    (4, "longitudinal-average"),
    (5, "transverse-cross-validation"),
    (6, "scaling-law"),
    (7, "energy-balance"),
    (8, "symmetry-suite"),
    (9, "determinism"),
];

/// Reference molecule: w0 = 1e-4 with eta about 1e-2, curlyC = curlyB_z = 1e-2.
pub fn reference_params() -> ModelParams {
    let w0 = 1e-4;
    ModelParams::hydrogenic([w0 * (1.0 - 1e-2), w0, w0 * (1.0 + 1.3e-2)])
        .expect("reference frequencies are positive")
        .with_dimensionless(1e-2, [0.0, 0.0, 1e-2])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn perturbed_state() -> Result<(bool, String)> {
    let t = Instant::now();
    let p = ModelParams::hydrogenic([1.0e-4, 1.13e-4, 0.91e-4])?;
    let (checks, stray) = verify_dressing(&p, 8, 1e-3)?;
    let worst = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    let ok = worst <= 1e-4 && t.elapsed() <= RUNTIME_LIMIT;
    Ok((ok, format!("{} coefficients, max rel error {worst:.3e}, stray amplitude {stray:.3e}", checks.len())))
}

fn semiclassical_closed_form() -> Result<(bool, String)> {
    let t = Instant::now();
    let p = reference_params();
    let sc = sc_integral_numeric(&p, &QuadratureSpec::default())?;
    let closed = sc_momentum_closed(&p).z;
    let scale = sc_prefactor(&p) * p.b0.z;
    let (a, b) = (rel(sc.primary.value() * scale, closed), rel(sc.alternate.value() * scale, closed));
    let ok = a <= 1e-3 && b <= 1e-3 && t.elapsed() <= RUNTIME_LIMIT;
    Ok((
        ok,
        format!(
            "numeric/closed = {:.6} (ladder 1) {:.6} (ladder 2), rel error {a:.3e} {b:.3e}, ladders agree to {:.1e}",
            sc.primary.value() * scale / closed,
            sc.alternate.value() * scale / closed,
            sc.ladder_discrepancy()
        ),
    ))
}

fn kernel_integrals() -> Result<(bool, String)> {
    let p = reference_params();
    let rest = p.m_e * p.c * p.c / p.hbar;
    let mut pts = Vec::new();
    let mut ok = true;
    for x in [1e-3, 1e-4, 1e-5] {
        let w0 = x * rest;
        let a = KernelArgs::new(-p.hbar * w0, -2.0 * p.hbar * w0, p.m_e);
        let num = kernel_integral_numeric(&a, Dispersion::Full, &p)?;
        let err = rel(num, kernel_integral_log(&a, &p));
        ok &= err <= 5.0 * x;
        pts.push((x, err));
    }
    let slope = (pts[2].1.ln() - pts[0].1.ln()) / (pts[2].0.ln() - pts[0].0.ln());
    ok &= (slope - 1.0).abs() <= 0.2;
    let errs: Vec<String> = pts.iter().map(|(x, e)| format!("{x:.0e}:{e:.3e}")).collect();
    Ok((ok, format!("rel error {} (bound 5x), log-log slope {slope:.3}", errs.join(" "))))
}

fn longitudinal_average() -> Result<(bool, String)> {
    let p = reference_params();
    let eta = anisotropy(&p).max_eta();
    let quad = rotational_average_tensor(&p_par_tensor(&p), &p.b0, So3Grid::default())?;
    let closed = p_par_rot(&p);
    let d = (quad - closed).norm() / closed.norm();
    let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let t = trace_expansion_exact(&[q(99, 100), q(1, 1), q(1013, 1000)])?;
    let low = t.low_order_max().abs().to_f64().unwrap_or(f64::INFINITY);
    let ok = d <= 5.0 * eta && low <= 1e-12;
    Ok((
        ok,
        format!("quadrature vs closed {d:.3e} (bound {:.3e}), exact O(eta) and O(eta^2) residual {low:e}", 5.0 * eta),
    ))
}

fn transverse_cross_validation() -> Result<(bool, String)> {
    let p = reference_params();
    let spec = FockSpec { n_max: 10, ..FockSpec::default() };
    let f = p_perp_fock(&p, &spec)?;
    let analytic = perp_bracket();
    let r = f.coefficient / analytic;
    let verdict = bracket_verdict(Some(f.coefficient));
    let supports = match verdict.supports {
        Support::Bracket => "bracket",
        Support::Quoted => "quoted -1.06/144",
        Support::Neither => "neither",
        Support::Undecided => "undecided",
    };
    let ok = (r - 1.0).abs() <= 0.02;
    Ok((
        ok,
        format!(
            "fock coefficient {:.4e} vs bracket {analytic:.5} (ratio {r:.3e}); bracket/quoted = {:.2}; verdict: supports {supports}",
            f.coefficient, verdict.bracket_over_quoted
        ),
    ))
}

fn scaling_law() -> Result<(bool, String)> {
    let s = scaling_exponent(&reference_params(), &[1e-5, 1e-4, 1e-3])?;
    Ok(((s - 2.0).abs() <= 0.05, format!("fitted exponent {s:.6}")))
}

/// 100 seeded cases of (Q0, B0, orientation); W and Delta E_kin must agree to 1e-7.
fn energy_balance() -> Result<(bool, String)> {
    let base = reference_params();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let resp = MomentumResponse::analytic(&base, Orientation::Fixed);
    let (mut failures, mut worst) = (0, 0.0f64);
    for _ in 0..100 {
        let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let rot = Rotation3::from_scaled_axis(axis * rng.random_range(0.0..std::f64::consts::PI));
        let lab = Vector3::z() * base.b0.z * 10f64.powf(rng.random_range(-2.0..1.0));
        let b0 = rot.inverse() * lab;
        let p_scale = resp.momentum(&b0).norm();
        let q0 = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            * (10.0 * p_scale);
        let w = magnetization_work(&b0, &q0, &base, &resp, 10_000)?;
        let de = delta_e_kin(&b0, &q0, &base, &resp);
        let e = (w - de).abs() / w.abs().max(de.abs());
        worst = worst.max(e);
        if !(e <= 1e-7) {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("100 cases, {failures} failures, max rel difference {worst:.3e}")))
}

fn canned_sweep_config() -> Result<crate::config::RunConfig> {
    let cfg = parse_config(
        r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4,
            "curly_c": 0.01, "curly_b": [0, 0, 0.01], "q0": [1e-9, -2e-9, 5e-9]}}"#,
    )?;
    with_sweep(&cfg, SweepSpec { param: "curly_b_z".into(), from: 0.0, to: 0.01, steps: 5 })
}

fn symmetry_suite() -> Result<(bool, String)> {
    let p = reference_params();
    let q = QuadratureSpec::default();
    let outputs = |p: &ModelParams| -> Result<Vec<Vector3<f64>>> {
        let r = p_cas_total(p, &ReportOptions::default())?;
        Ok(vec![p_perp_rot(p), p_par_rot(p), p_par_fixed(p), r.p_total, p_cas_optical(p), sc_momentum_closed(p)])
    };
    let odd = |a: &[Vector3<f64>], b: &[Vector3<f64>]| {
        a.iter().zip(b).map(|(x, y)| (x + y).norm() / x.norm().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    };
    let base = outputs(&p)?;
    let odd_c = odd(&base, &outputs(&p.with_chiral_c(-p.chiral_c))?);
    let odd_b = odd(&base, &outputs(&p.with_b0(-p.b0))?);
    let sc = sc_momentum_numeric(&p, &q)?;
    let sc_odd = (sc + sc_momentum_numeric(&p.with_chiral_c(-p.chiral_c), &q)?).norm() / sc.norm();

    let iso = ModelParams::hydrogenic([1e-4; 3])?.with_dimensionless(1e-2, [0.0, 0.0, 1e-2]);
    let iso_max = outputs(&iso)?.iter().chain([&sc_momentum_numeric(&iso, &q)?]).map(|v| v.norm()).fold(0.0, f64::max);

    // m_N = m_e is rejected by the Zeeman reduced mass, so set it directly
    let eq = ModelParams { m_n: p.m_e, ..p.clone() };
    let par_eq = p_par_rot(&eq).norm().max(p_par_fixed(&eq).norm());

    let length = (p.hbar / (p.mu * p.omega_0)).sqrt();
    let r = mean_position(&p)?.norm() / length;
    let abr = p_cas_total(&p, &ReportOptions::default())?.p_abr.norm() / base[3].norm();

    let rows = run_rows(&canned_sweep_config()?)?;
    let ledger = rows
        .iter()
        .map(|row| {
            let Some(r) = &row.report else { return f64::INFINITY };
            let s = [r.k.norm(), r.p_kin.norm(), r.p_total.norm()].into_iter().fold(0.0, f64::max);
            r.ledger_residual() / s
        })
        .fold(0.0, f64::max);

    let ok = odd_c <= 1e-12
        && odd_b <= 1e-12
        && sc_odd <= 1e-12
        && iso_max == 0.0
        && par_eq == 0.0
        && r <= 1e-12
        && abr <= 1e-12
        && ledger <= LEDGER_TOL;
    Ok((
        ok,
        format!(
            "odd in C {odd_c:.1e} (numeric {sc_odd:.1e}), odd in B0 {odd_b:.1e}, isotropic {iso_max:e}, \
             m_N = m_e longitudinal {par_eq:e}, <r>/l {r:.1e}, P_Abr/P {abr:.1e}, ledger {ledger:.1e} over {} rows",
            rows.len()
        ),
    ))
}

/// Runs the B0 sweep and the cheap criteria twice and compares the bytes.
fn determinism() -> Result<(bool, String)> {
    let cfg = canned_sweep_config()?;
    let a = run(&cfg, "sweep")?;
    let b = run(&cfg, "sweep")?;
    let lines = |ids: &[u32]| -> Vec<String> { ids.iter().map(|&i| evaluate_one(i).line()).collect() };
    let cheap = [4, 6, 8];
    let (x, y) = (lines(&cheap), lines(&cheap));
    let ok = a == b && x == y && a.csv.lines().count() == 6;
    Ok((
        ok,
        format!(
            "sweep csv {} bytes identical: {}, provenance identical: {}, selftest lines identical: {}",
            a.csv.len(),
            a.csv == b.csv,
            a.provenance == b.provenance,
            x == y
        ),
    ))
}

/// Evaluates one criterion; errors count as failures.
pub fn evaluate_one(id: u32) -> Outcome {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let result = match id {
        1 => perturbed_state(),
        2 => semiclassical_closed_form(),
        3 => kernel_integrals(),
        4 => longitudinal_average(),
        5 => transverse_cross_validation(),
        6 => scaling_law(),
        7 => energy_balance(),
        8 => symmetry_suite(),
        9 => determinism(),
        _ => Ok((false, "no such criterion".into())),
    };
    match result {
        Ok((pass, detail)) => Outcome { id, name, pass, detail },
        Err(e) => Outcome { id, name, pass: false, detail: format!("error {}: {e}", e.code()) },
    }
}

/// Criteria whose number or name contains `filter`.
pub fn selected(filter: Option<&str>) -> Vec<u32> {
    CRITERIA
        .iter()
        .filter(|(id, name)| filter.is_none_or(|f| id.to_string() == f || name.contains(f)))
        .map(|c| c.0)
        .collect()
}

pub fn run_suite(filter: Option<&str>) -> Vec<Outcome> {
    selected(filter).into_iter().map(evaluate_one).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_by_number_or_name() {
        assert_eq!(selected(None).len(), 9);
        assert_eq!(selected(Some("7")), vec![7]);
        assert_eq!(selected(Some("scaling")), vec![6]);
        assert!(selected(Some("nothing")).is_empty());
    }

    #[test]
    fn line_format() {
        let o = Outcome { id: 6, name: "scaling-law", pass: true, detail: "x".into() };
        assert_eq!(o.line(), "criterion 6 [scaling-law]: PASS x");
        assert!(evaluate_one(42).line().contains("FAIL"));
    }
}
