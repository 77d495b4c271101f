use std::ffi::{c_char, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use qhlab_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { qh_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&b| b as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn disk() -> *mut QhDomain {
    let mut d = ptr::null_mut();
    let spec = c(r#"{"shape": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}}"#);
    assert_eq!(unsafe { qh_domain_from_json(spec.as_ptr(), &mut d) }, QhStatus::Ok);
    d
}

#[test]
fn domain_queries() {
    let d = disk();
    let (z1, z2) = ([0.0, 0.0], [0.5, 0.0]);
    unsafe {
        let mut dim = 0usize;
        assert_eq!(qh_domain_dimension(d, &mut dim), QhStatus::Ok);
        assert_eq!(dim, 2);
        let mut inside = false;
        assert_eq!(qh_domain_contains(d, [0.2, 0.3].as_ptr(), 2, &mut inside), QhStatus::Ok);
        assert!(inside);
        let mut j = 0.0;
        assert_eq!(qh_j_metric(d, z1.as_ptr(), z2.as_ptr(), 2, &mut j), QhStatus::Ok);
        assert!((j - 2f64.ln()).abs() < 1e-15);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(qh_k_between(d, z1.as_ptr(), z2.as_ptr(), 2, 0.1, 12, 1, &mut lo, &mut hi), QhStatus::Ok);
        assert!(lo <= hi && hi <= 2f64.ln() + 1e-3);
        qh_domain_free(d);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let d = disk();
    unsafe {
        let mut out = 0.0;
        assert_eq!(qh_boundary_distance(d, [2.0, 0.0].as_ptr(), 2, &mut out), QhStatus::PointNotInDomain);
        assert!(last_error().contains("not interior"));
        assert_eq!(qh_boundary_distance(d, [0.0, 0.0, 0.0].as_ptr(), 3, &mut out), QhStatus::DimensionMismatch);
        assert_eq!(qh_boundary_distance(ptr::null(), [0.0, 0.0].as_ptr(), 2, &mut out), QhStatus::NullPointer);
        let mut h = ptr::null_mut();
        assert_eq!(qh_domain_from_json(c("{").as_ptr(), &mut h), QhStatus::InvalidJson);
        assert!(h.is_null());
        let bad = c(r#"{"shape": {"kind": "ball", "center": [0.0, 0.0], "radius": -1.0}}"#);
        assert_eq!(qh_domain_from_json(bad.as_ptr(), &mut h), QhStatus::InvalidDomain);
        qh_domain_free(d);
        qh_domain_free(ptr::null_mut());
    }
}

#[test]
fn mapping_round_trip() {
    let d = disk();
    unsafe {
        let mut m = ptr::null_mut();
        let kind = c(r#"{"kind": "radial_power", "exponent": 2.0}"#);
        assert_eq!(qh_mapping_new(d, kind.as_ptr(), &mut m), QhStatus::Ok);
        let mut w = [0.0; 2];
        assert_eq!(qh_mapping_evaluate(m, [0.5, 0.0].as_ptr(), 2, w.as_mut_ptr()), QhStatus::Ok);
        assert!((w[0] - 0.25).abs() < 1e-15 && w[1] == 0.0);
        let mut z = [0.0; 2];
        assert_eq!(qh_mapping_inverse(m, w.as_ptr(), 2, z.as_mut_ptr()), QhStatus::Ok);
        assert!((z[0] - 0.5).abs() < 1e-12);
        let mut t = ptr::null_mut();
        assert_eq!(qh_mapping_target(m, &mut t), QhStatus::Ok);
        let mut inside = true;
        assert_eq!(qh_domain_contains(t, [1.5, 0.0].as_ptr(), 2, &mut inside), QhStatus::Ok);
        assert!(!inside);
        qh_domain_free(t);
        qh_mapping_free(m);

        let mut big = ptr::null_mut();
        let spec = c(r#"{"shape": {"kind": "ball", "center": [0.0, 0.0], "radius": 2.0}}"#);
        assert_eq!(qh_domain_from_json(spec.as_ptr(), &mut big), QhStatus::Ok);
        let slit = c(r#"{"kind": "slit_riemann"}"#);
        assert_eq!(qh_mapping_new(big, slit.as_ptr(), &mut m), QhStatus::MapInvalid);
        qh_domain_free(big);
        qh_domain_free(d);
    }
}

const UNIT_LEDGER: &str = r#"{
    "a": 1.0, "c": 1.0, "cqh_m": 1.0, "cqh_c": 1.0, "rho1": 1.0, "nu_prime": 1.0, "h1": 1.0,
    "psi": {"knots": [[0.0, 0.0], [1.0, 1.0]], "tail": {"kind": "affine", "slope": 1.0}},
    "eta": {"knots": [[0.0, 0.0], [1.0, 1.0]], "tail": {"kind": "affine", "slope": 1.0}}
}"#;

#[test]
fn ledger_handle() {
    unsafe {
        let mut l = ptr::null_mut();
        assert_eq!(qh_ledger_from_json(c(UNIT_LEDGER).as_ptr(), &mut l), QhStatus::Ok);
        let (mut level, mut mantissa) = (0u32, 0.0);
        assert_eq!(qh_ledger_member(l, c("vartheta").as_ptr(), &mut level, &mut mantissa), QhStatus::Ok);
        assert_eq!((level, mantissa), (0, 0.5));
        assert_eq!(qh_ledger_member(l, c("b3").as_ptr(), &mut level, &mut mantissa), QhStatus::Ok);
        assert_eq!(level, 2);
        assert_eq!(qh_ledger_member(l, c("b9").as_ptr(), &mut level, &mut mantissa), QhStatus::InvalidParameter);
        let mut holds = [false; 3];
        assert_eq!(qh_ledger_verify(l, holds.as_mut_ptr()), QhStatus::Ok);
        assert_eq!(holds, [true; 3]);
        qh_ledger_free(l);

        let degenerate = UNIT_LEDGER.replace(r#""cqh_c": 1.0"#, r#""cqh_c": 0.0"#);
        assert_eq!(qh_ledger_from_json(c(&degenerate).as_ptr(), &mut l), QhStatus::Ok);
        assert_eq!(qh_ledger_member(l, c("b4").as_ptr(), &mut level, &mut mantissa), QhStatus::Ok);
        assert!(mantissa.is_infinite());
        qh_ledger_free(l);

        let bad = UNIT_LEDGER.replace(r#""a": 1.0"#, r#""a": 0.5"#);
        assert_eq!(qh_ledger_from_json(c(&bad).as_ptr(), &mut l), QhStatus::InvalidConstant);
    }
}

#[test]
fn tower_compare_is_three_way() {
    let mut o = 7;
    unsafe {
        assert_eq!(qh_tower_compare(1, 800.0, 0, 1e300, &mut o), QhStatus::Ok);
        assert_eq!(o, 1);
        assert_eq!(qh_tower_compare(2, 800.0, 2, 800.0, &mut o), QhStatus::Ok);
        assert_eq!(o, 0);
        assert_eq!(qh_tower_compare(0, 2.0, 1, 701.0, &mut o), QhStatus::Ok);
        assert_eq!(o, -1);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qhlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["qh_domain_from_json", "qh_mapping_evaluate", "qh_ledger_verify", "QH_STATUS_PANIC"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-xc"]).arg(&header).output() else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
