//! C ABI for chiral-casimir.
//!
//! Parameters live behind an opaque `CcParams` handle. Every call returns a
//! `CcStatus`; on failure the message and module-qualified error code of the
//! last error on the calling thread are available from
//! `cc_last_error_message` and `cc_last_error_code`. Strings returned by the
//! library are released with `cc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chiral_casimir::config::parse_config;
use chiral_casimir::energy::{delta_e_kin, magnetization_work, MomentumResponse};
use chiral_casimir::params::ModelParams;
use chiral_casimir::qed::{p_cas_total, FockSpec, Orientation, PerpSource, ReportOptions};
use chiral_casimir::run::run;
use chiral_casimir::semiclassical::{sc_momentum_closed, sc_momentum_numeric, QuadratureSpec};
use chiral_casimir::units::ALPHA_FS;
use chiral_casimir::Error;
use nalgebra::Vector3;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    /// Rejected input (parameters, config, argument out of range).
    InvalidInput = 2,
    /// Quadrature, eigen or resolvent solve did not converge.
    NotConverged = 3,
    /// Internal invariant violated.
    Invariant = 4,
    /// Rust panic caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CcOrientation {
    Averaged = 0,
    Fixed = 1,
}

/// Momenta of one evaluation, internal units.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CcMomentum {
    pub p_perp: [f64; 3],
    pub p_par: [f64; 3],
    pub p_total: [f64; 3],
    pub p_kin: [f64; 3],
    pub p_abr: [f64; 3],
    pub p_sc_closed: [f64; 3],
    pub ledger_residual: f64,
    /// tr T/3 of the resolvent route in units of the bracket scale; NaN
    /// for the analytic route.
    pub fock_coefficient: f64,
}

/// Opaque parameter handle.
pub struct CcParams {
    inner: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<(CString, CString)>> = const { RefCell::new(None) };
}

fn set_error(code: &str, msg: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some((clean(code), clean(msg))));
}

fn status_of(e: &Error) -> CcStatus {
    match e.exit_code() {
        3 => CcStatus::NotConverged,
        4 => CcStatus::Invariant,
        _ => CcStatus::InvalidInput,
    }
}

/// Runs `f`, records any error and converts panics.
fn guard<F: FnOnce() -> Result<(), CcStatus>>(f: F) -> CcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("ffi.Panic", "panic inside chiral-casimir");
            CcStatus::Panic
        }
    }
}

fn lift<T>(r: chiral_casimir::Result<T>) -> Result<T, CcStatus> {
    r.map_err(|e| {
        set_error(e.code(), &e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> CcStatus {
    set_error("ffi.NullPointer", &format!("{what} is null"));
    CcStatus::NullPointer
}

unsafe fn read3(p: *const f64, what: &str) -> Result<[f64; 3], CcStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok([*p, *p.add(1), *p.add(2)])
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, CcStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("ffi.InvalidUtf8", &format!("{what} is not UTF-8"));
        CcStatus::InvalidInput
    })
}

unsafe fn handle<'a>(h: *const CcParams) -> Result<&'a ModelParams, CcStatus> {
    h.as_ref().map(|h| &h.inner).ok_or_else(|| null("params handle"))
}

fn orientation(o: CcOrientation) -> Orientation {
    match o {
        CcOrientation::Averaged => Orientation::Averaged,
        CcOrientation::Fixed => Orientation::Fixed,
    }
}

fn boxed(p: ModelParams) -> *mut CcParams {
    Box::into_raw(Box::new(CcParams { inner: p }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(_, m)| m.as_ptr()))
}

/// Module-qualified code of the last error (for example "params.DegenerateMasses"), or NULL.
#[no_mangle]
pub extern "C" fn cc_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(c, _)| c.as_ptr()))
}

/// Creates parameters in internal units (hbar = c = m_e = eps0 = 1).
/// `charge <= 0` selects the elementary charge. `omega`, `b0` and `q0` point
/// to three doubles each.
///
/// # Safety
/// Array pointers must reference three readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_params_new(
    m_n: f64,
    charge: f64,
    chiral_c: f64,
    omega: *const f64,
    b0: *const f64,
    q0: *const f64,
    out: *mut *mut CcParams,
) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (w, b, q) = (read3(omega, "omega")?, read3(b0, "b0")?, read3(q0, "q0")?);
        let e = if charge > 0.0 { charge } else { (4.0 * std::f64::consts::PI * ALPHA_FS).sqrt() };
        let p = lift(ModelParams::internal(m_n, e, chiral_c, w, Vector3::from(b), Vector3::from(q)))?;
        *out = boxed(p);
        Ok(())
    })
}

/// Creates parameters from the `molecule` block of a JSON run configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_params_from_config(json: *const c_char, out: *mut *mut CcParams) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = lift(parse_config(read_str(json, "json")?))?;
        *out = boxed(lift(cfg.molecule.to_params())?);
        Ok(())
    })
}

/// Sets C and B0 from dimensionless values (`curly_b` points to three doubles).
///
/// # Safety
/// `h` must come from a constructor and not be freed; `curly_b` must reference three doubles.
#[no_mangle]
pub unsafe extern "C" fn cc_params_set_dimensionless(h: *mut CcParams, curly_c: f64, curly_b: *const f64) -> CcStatus {
    guard(|| {
        let b = read3(curly_b, "curly_b")?;
        let h = h.as_mut().ok_or_else(|| null("params handle"))?;
        h.inner = h.inner.with_dimensionless(curly_c, b);
        Ok(())
    })
}

/// Copies C, B0 and Q0 out of a handle. Any output pointer may be NULL.
///
/// # Safety
/// `h` must be live; non-null outputs must be writable (three doubles for vectors).
#[no_mangle]
pub unsafe extern "C" fn cc_params_get(h: *const CcParams, chiral_c: *mut f64, b0: *mut f64, q0: *mut f64) -> CcStatus {
    guard(|| {
        let p = handle(h)?;
        if !chiral_c.is_null() {
            *chiral_c = p.chiral_c;
        }
        for (dst, v) in [(b0, p.b0), (q0, p.q0)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(v.as_ptr(), dst, 3);
            }
        }
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `h` must come from a constructor and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_params_free(h: *mut CcParams) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

fn fill(out: &mut CcMomentum, p: &ModelParams, r: &chiral_casimir::qed::CasimirReport) {
    let a = |v: Vector3<f64>| [v.x, v.y, v.z];
    *out = CcMomentum {
        p_perp: a(r.p_perp),
        p_par: a(r.p_par),
        p_total: a(r.p_total),
        p_kin: a(r.p_kin),
        p_abr: a(r.p_abr),
        p_sc_closed: a(sc_momentum_closed(p)),
        ledger_residual: r.ledger_residual(),
        fock_coefficient: r.fock.as_ref().map_or(f64::NAN, |f| f.coefficient),
    };
}

/// Closed-form Casimir momentum.
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_compute(h: *const CcParams, o: CcOrientation, out: *mut CcMomentum) -> CcStatus {
    guard(|| {
        let p = handle(h)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = lift(p_cas_total(p, &ReportOptions { orientation: orientation(o), perp: PerpSource::Analytic }))?;
        fill(out, p, &r);
        Ok(())
    })
}

/// Casimir momentum with the transverse part from Fock-space resolvents at
/// truncation `n_max` (other settings default).
///
/// # Safety
/// `h` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cc_compute_fock(
    h: *const CcParams,
    n_max: u32,
    o: CcOrientation,
    out: *mut CcMomentum,
) -> CcStatus {
    guard(|| {
        let p = handle(h)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let spec = FockSpec { n_max: n_max as usize, ..FockSpec::default() };
        lift(spec.validate())?;
        let r = lift(p_cas_total(p, &ReportOptions { orientation: orientation(o), perp: PerpSource::Fock(spec) }))?;
        fill(out, p, &r);
        Ok(())
    })
}

/// Semiclassical momentum from the regularized frequency integral (default
/// quadrature settings), written to three doubles.
///
/// # Safety
/// `h` must be live and `out` must reference three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cc_sc_momentum(h: *const CcParams, out: *mut f64) -> CcStatus {
    guard(|| {
        let p = handle(h)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = lift(sc_momentum_numeric(p, &QuadratureSpec::default()))?;
        ptr::copy_nonoverlapping(v.as_ptr(), out, 3);
        Ok(())
    })
}

/// Work done on the magnetization over `n_steps` and the kinetic energy
/// change, for a field switched on from zero to the handle's B0.
///
/// # Safety
/// `h` must be live and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn cc_energy_balance(
    h: *const CcParams,
    o: CcOrientation,
    n_steps: u32,
    work: *mut f64,
    kinetic: *mut f64,
) -> CcStatus {
    guard(|| {
        let p = handle(h)?;
        if work.is_null() || kinetic.is_null() {
            return Err(null("output"));
        }
        let r = MomentumResponse::analytic(p, orientation(o));
        *work = lift(magnetization_work(&p.b0, &p.q0, p, &r, n_steps as usize))?;
        *kinetic = delta_e_kin(&p.b0, &p.q0, p, &r);
        Ok(())
    })
}

/// Runs a JSON configuration and returns the CSV table in `*csv`
/// (free with `cc_string_free`).
///
/// # Safety
/// `json` must be NUL-terminated; `csv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cc_run_config(json: *const c_char, csv: *mut *mut c_char) -> CcStatus {
    guard(|| {
        if csv.is_null() {
            return Err(null("csv"));
        }
        let cfg = lift(parse_config(read_str(json, "json")?))?;
        let out = lift(run(&cfg, "ffi"))?;
        *csv = CString::new(out.csv).map_err(|_| CcStatus::Invariant)?.into_raw();
        Ok(())
    })
}

/// Frees a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
