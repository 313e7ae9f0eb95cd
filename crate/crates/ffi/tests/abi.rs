use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use chiral_casimir_ffi::*;

const ZERO: [f64; 3] = [0.0; 3];

fn reference() -> *mut CcParams {
    let mut h = ptr::null_mut();
    unsafe {
        let omega = chiral_casimir::acceptance::reference_params().omega;
        assert_eq!(cc_params_new(1836.0, 0.0, 0.0, omega.as_ptr(), ZERO.as_ptr(), ZERO.as_ptr(), &mut h), CcStatus::Ok);
        assert_eq!(cc_params_set_dimensionless(h, 0.01, [0.0, 0.0, 0.01].as_ptr()), CcStatus::Ok);
    }
    h
}

fn last_code() -> String {
    unsafe { CStr::from_ptr(cc_last_error_code()).to_str().unwrap().to_string() }
}

#[test]
fn compute_matches_the_library() {
    let h = reference();
    let mut m = CcMomentum::default();
    unsafe {
        assert_eq!(cc_compute(h, CcOrientation::Averaged, &mut m), CcStatus::Ok);
        assert!(cc_last_error_message().is_null());
    }
    let p = chiral_casimir::acceptance::reference_params();
    let r = chiral_casimir::qed::p_cas_total(&p, &Default::default()).unwrap();
    assert_eq!(m.p_total, [r.p_total.x, r.p_total.y, r.p_total.z]);
    assert_eq!(m.ledger_residual, 0.0);
    assert!(m.fock_coefficient.is_nan());
    let mut sc = [0.0; 3];
    unsafe {
        assert_eq!(cc_sc_momentum(h, sc.as_mut_ptr()), CcStatus::Ok);
        cc_params_free(h);
    }
    assert!(sc[2] != 0.0 && sc[0] == 0.0);
    // the numeric semiclassical value is 0.7336 of the closed form
    assert!((sc[2] / m.p_sc_closed[2] - 0.7336).abs() < 1e-3);
}

#[test]
fn fock_route_through_the_abi() {
    let h = reference();
    let mut m = CcMomentum::default();
    unsafe {
        assert_eq!(cc_compute_fock(h, 4, CcOrientation::Fixed, &mut m), CcStatus::Ok);
        assert!(m.fock_coefficient.is_finite());
        assert_eq!(cc_compute_fock(h, 99, CcOrientation::Fixed, &mut m), CcStatus::InvalidInput);
        cc_params_free(h);
    }
}

#[test]
fn errors_carry_module_codes() {
    let mut h = ptr::null_mut();
    unsafe {
        let bad = [-1.0, 1e-4, 1e-4];
        assert_eq!(
            cc_params_new(1836.0, 0.0, 0.0, bad.as_ptr(), ZERO.as_ptr(), ZERO.as_ptr(), &mut h),
            CcStatus::InvalidInput
        );
        assert_eq!(last_code(), "params.NonPositiveInput");
        assert!(h.is_null());
        assert_eq!(
            cc_params_new(1836.0, 0.0, 0.0, ptr::null(), ZERO.as_ptr(), ZERO.as_ptr(), &mut h),
            CcStatus::NullPointer
        );
        let json =
            CString::new(r#"{"molecule": {"omega_x": 1e-4, "omega_y": 1e-4, "omega_z": 1e-4, "spin": 1}}"#).unwrap();
        assert_eq!(cc_params_from_config(json.as_ptr(), &mut h), CcStatus::InvalidInput);
        assert_eq!(last_code(), "cli.UnknownField");
        let msg = CStr::from_ptr(cc_last_error_message()).to_str().unwrap();
        assert!(msg.contains("spin"));
        cc_params_free(ptr::null_mut());
        cc_string_free(ptr::null_mut());
    }
}

#[test]
fn config_handle_and_csv_run() {
    let json = CString::new(
        r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4,
            "curly_c": 0.01, "curly_b": [0, 0, 0.01], "q0": [0, 0, 1e-9]},
            "sweep": {"param": "curly_b_z", "from": 0, "to": 0.01, "steps": 3}}"#,
    )
    .unwrap();
    let mut h = ptr::null_mut();
    let (mut c, mut b0, mut q0) = (0.0, [0.0; 3], [0.0; 3]);
    let mut csv = ptr::null_mut();
    unsafe {
        assert_eq!(cc_params_from_config(json.as_ptr(), &mut h), CcStatus::Ok);
        assert_eq!(cc_params_get(h, &mut c, b0.as_mut_ptr(), q0.as_mut_ptr()), CcStatus::Ok);
        cc_params_free(h);
        assert_eq!(cc_run_config(json.as_ptr(), &mut csv), CcStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_string();
        cc_string_free(csv);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("param,value,p_perp_x"));
    }
    let p = chiral_casimir::acceptance::reference_params();
    assert!((c / p.chiral_c - 1.0).abs() < 1e-14);
    assert!((b0[2] / p.b0.z - 1.0).abs() < 1e-14);
    assert_eq!(q0, [0.0, 0.0, 1e-9]);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libchiral_casimir_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(&cc)
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler not found; set CC");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
