use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use embedcheck_ffi::*;

fn space(json: &str) -> *mut EcSpace {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ec_space_from_json(text.as_ptr(), &mut out) }, EcStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ec_last_error_message()) }.to_str().unwrap().to_string()
}

#[test]
fn lebesgue_ball_through_the_handle() {
    let s = space(r#"{"dim":2,"measures":[{"id":"m","kind":"lebesgue"}]}"#);
    let id = CString::new("m").unwrap();
    let c = [0.3, -0.2];
    let (mut v, mut e) = (0.0, 1.0);
    let st = unsafe { ec_ball_measure(s, id.as_ptr(), c.as_ptr(), 2, 0.5, 0.01, 0, &mut v, &mut e) };
    assert_eq!(st, EcStatus::Ok);
    assert!((v - std::f64::consts::PI * 0.25).abs() < 1e-14);
    assert_eq!(e, 0.0);
    let mut dim = 0;
    assert_eq!(unsafe { ec_space_dim(s, &mut dim) }, EcStatus::Ok);
    assert_eq!(dim, 2);
    unsafe { ec_space_free(s) };
}

#[test]
fn errors_map_to_codes_and_messages() {
    let bad = CString::new(r#"{"dim":2,"measures":[{"id":"m","kind":"lebesgue"}],"domian":{}}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ec_space_from_json(bad.as_ptr(), &mut out) }, EcStatus::Schema);
    assert!(out.is_null());
    assert!(last_error().contains("domian"));

    let s = space(r#"{"dim":1,"measures":[{"id":"m","kind":"lebesgue"}]}"#);
    let id = CString::new("nope").unwrap();
    let (mut v, mut e) = (0.0, 0.0);
    let st = unsafe { ec_ball_measure(s, id.as_ptr(), [0.0].as_ptr(), 1, 1.0, 0.01, 0, &mut v, &mut e) };
    assert_eq!(st, EcStatus::UnknownMeasure);
    let st = unsafe { ec_ball_measure(s, ptr::null(), [0.0].as_ptr(), 1, 1.0, 0.01, 0, &mut v, &mut e) };
    assert_eq!(st, EcStatus::NullOrInvalidArgument);
    unsafe { ec_space_free(s) };

    let mut t = 0.0;
    assert_eq!(unsafe { ec_cusp_exponent(2, 0.5, -4.0, -4.0, 2.0, 2.0, &mut t) }, EcStatus::InvalidParameter);
    assert_eq!(unsafe { ec_cusp_exponent(2, 2.0, -4.0, -4.0, 2.0, 2.0, &mut t) }, EcStatus::Ok);
    assert_eq!(t, 2.0);
    assert!(last_error().is_empty());
}

#[test]
fn classify_optimal_weight() {
    let s = space(
        r#"{"dim":2,"measures":[{"id":"w","kind":"radial-log-singular"},
            {"id":"v","kind":"radial-reciprocal-log"}],"e":{"points":[[0,0]]}}"#,
    );
    let (mu, nu) = (CString::new("w").unwrap(), CString::new("v").unwrap());
    let q = EcQuery {
        p: 2.0,
        q: 2.0,
        alpha: 1.0,
        lambda: 1.0,
        truncation_supported: true,
        measure_density: true,
    };
    let radii: Vec<f64> = (0..16).map(|i| 10f64.powf(-1.0 - 5.0 * i as f64 / 15.0)).collect();
    let mut theta = vec![0.0; 16];
    let st = unsafe { ec_theta_scan(s, mu.as_ptr(), nu.as_ptr(), &q, radii.as_ptr(), 16, theta.as_mut_ptr()) };
    assert_eq!(st, EcStatus::Ok);
    assert!(theta.windows(2).all(|w| w[1] <= w[0]));
    let mut v = EcVerdict::Inconclusive;
    let st = unsafe { ec_classify_theta(s, mu.as_ptr(), nu.as_ptr(), &q, radii.as_ptr(), 16, &mut v) };
    assert_eq!(st, EcStatus::Ok);
    assert_eq!(v, EcVerdict::Compact);
    unsafe { ec_space_free(s) };
}

#[test]
fn scenario_report_as_json() {
    let id = CString::new("lipschitz-trace").unwrap();
    let params = CString::new(r#"{"n":3,"p":2}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ec_scenario_run(id.as_ptr(), params.as_ptr(), 0, &mut out) }, EcStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { ec_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["quantities"]["q_star"], 4.0);

    let mut q = 0.0;
    assert_eq!(unsafe { ec_critical_exponent(3.0, 2.0, 1.0, 2.0, &mut q) }, EcStatus::Ok);
    assert_eq!(q, 4.0);
    assert_eq!(unsafe { ec_critical_exponent(1.0, 2.0, 1.0, 2.0, &mut q) }, EcStatus::Ok);
    assert!(q.is_infinite());
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/embedcheck.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["ec_space_from_json", "ec_ball_measure", "ec_classify_theta", "ec_scenario_run", "ec_last_error_message"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    // only when a C compiler is around
    let Ok(st) = Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).status() else {
        return;
    };
    assert!(st.success());
}
