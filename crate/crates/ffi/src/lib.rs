//! C ABI over the embedcheck library.
//!
//! Objects cross the boundary as opaque handles. Every function returns an
//! `EcStatus`; on failure `ec_last_error_message` describes the error for
//! the calling thread until the next call on that thread.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use embedcheck::criteria::{classify, critical_exponents, cusp_exponent, theta_scan, EmbeddingQuery, Verdict};
use embedcheck::scenarios::{run_scenario, ScenarioId};
use embedcheck::space::{ball_measure_with, BallSpec, EstimateOptions, SpaceModel};
use embedcheck::Error;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    NullOrInvalidArgument = 1,
    /// The space document failed validation.
    Schema = 2,
    /// A parameter is outside its admissible range.
    InvalidParameter = 3,
    UnknownMeasure = 4,
    /// Degenerate measure, exhausted budget, failed fit or empty ball.
    Numerical = 5,
    /// A hypothesis of the requested criterion does not hold.
    Hypothesis = 6,
    /// Any other library error.
    Other = 7,
    /// A panic was caught at the boundary.
    Panic = 8,
}

/// Verdict codes written by `ec_classify_theta`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcVerdict {
    Compact = 0,
    Bounded = 1,
    NotCompact = 2,
    NotBounded = 3,
    Inconclusive = 4,
}

/// Opaque space handle.
pub struct EcSpace {
    inner: SpaceModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EcStatus {
    match e {
        Error::Schema { .. } | Error::Json(_) => EcStatus::Schema,
        Error::InvalidParameter { .. } | Error::EmptyRegion(_) | Error::OutsideDomain { .. } => {
            EcStatus::InvalidParameter
        }
        Error::UnknownMeasure(_) => EcStatus::UnknownMeasure,
        Error::HypothesisViolation(_) => EcStatus::Hypothesis,
        e if e.is_numerical() => EcStatus::Numerical,
        _ => EcStatus::Other,
    }
}

enum Fail {
    Arg(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EcStatus::Ok
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            EcStatus::NullOrInvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside embedcheck");
            EcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Arg(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Arg(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Arg(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a space description (JSON text) into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_space_from_json(json: *const c_char, out: *mut *mut EcSpace) -> EcStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Arg("out is null"));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json is null or not UTF-8")?;
        let inner = SpaceModel::from_json_str(text)?;
        *out = Box::into_raw(Box::new(EcSpace { inner }));
        Ok(())
    })
}

/// Releases a handle from `ec_space_from_json`; null is ignored.
///
/// # Safety
/// `space` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_space_free(space: *mut EcSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Ambient dimension of the space.
///
/// # Safety
/// `space` must be a live handle and `dim` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_space_dim(space: *const EcSpace, dim: *mut usize) -> EcStatus {
    guard(|| {
        let s = space.as_ref().ok_or(Fail::Arg("space is null"))?;
        let d = dim.as_mut().ok_or(Fail::Arg("dim is null"))?;
        *d = s.inner.dim;
        Ok(())
    })
}

/// Measure of the open ball B(center, radius) with relative error target
/// `target` (0 < target < 1). Writes the estimate and its error bound.
///
/// # Safety
/// `center` must hold `dim` doubles; `measure_id` must be NUL-terminated;
/// `value` and `error` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ec_ball_measure(
    space: *const EcSpace,
    measure_id: *const c_char,
    center: *const f64,
    dim: usize,
    radius: f64,
    target: f64,
    seed: u64,
    value: *mut f64,
    error: *mut f64,
) -> EcStatus {
    guard(|| {
        let s = space.as_ref().ok_or(Fail::Arg("space is null"))?;
        let id = str_arg(measure_id, "measure_id is null or not UTF-8")?;
        let c = slice_arg(center, dim, "center is null")?;
        let (v, e) = (
            value.as_mut().ok_or(Fail::Arg("value is null"))?,
            error.as_mut().ok_or(Fail::Arg("error is null"))?,
        );
        let opts = EstimateOptions {
            target_rel_error: target,
            seed,
            ..Default::default()
        };
        let est = ball_measure_with(&s.inner, id, &BallSpec::new(c.to_vec(), radius), &opts)?;
        *v = est.value;
        *e = est.error;
        Ok(())
    })
}

/// Parameters of a Theta scan.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EcQuery {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub truncation_supported: bool,
    pub measure_density: bool,
}

unsafe fn query_of(q: &EcQuery, mu: *const c_char, nu: *const c_char) -> Result<EmbeddingQuery, Fail> {
    Ok(EmbeddingQuery {
        p: q.p,
        q: q.q,
        alpha: q.alpha,
        lambda: q.lambda,
        mu: str_arg(mu, "mu is null or not UTF-8")?.to_string(),
        nu: str_arg(nu, "nu is null or not UTF-8")?.to_string(),
        truncation_supported: q.truncation_supported,
        measure_density: q.measure_density,
    })
}

/// Theta(r) over the strictly decreasing `radii`, with centres taken from
/// the space's E. Writes `count` values into `theta_out`.
///
/// # Safety
/// `radii` and `theta_out` must hold `count` doubles; strings must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ec_theta_scan(
    space: *const EcSpace,
    mu: *const c_char,
    nu: *const c_char,
    query: *const EcQuery,
    radii: *const f64,
    count: usize,
    theta_out: *mut f64,
) -> EcStatus {
    guard(|| {
        let s = space.as_ref().ok_or(Fail::Arg("space is null"))?;
        let q = query_of(query.as_ref().ok_or(Fail::Arg("query is null"))?, mu, nu)?;
        let r = slice_arg(radii, count, "radii is null")?;
        if theta_out.is_null() && count > 0 {
            return Err(Fail::Arg("theta_out is null"));
        }
        let e = s.inner.e_points(32)?;
        let scan = theta_scan(&s.inner, &q, &e, r, &EstimateOptions::default())?;
        std::slice::from_raw_parts_mut(theta_out, count).copy_from_slice(&scan.theta_values);
        Ok(())
    })
}

/// Runs a Theta scan and classifies it.
///
/// # Safety
/// As for `ec_theta_scan`; `verdict` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_classify_theta(
    space: *const EcSpace,
    mu: *const c_char,
    nu: *const c_char,
    query: *const EcQuery,
    radii: *const f64,
    count: usize,
    verdict: *mut EcVerdict,
) -> EcStatus {
    guard(|| {
        let s = space.as_ref().ok_or(Fail::Arg("space is null"))?;
        let q = query_of(query.as_ref().ok_or(Fail::Arg("query is null"))?, mu, nu)?;
        let r = slice_arg(radii, count, "radii is null")?;
        let out = verdict.as_mut().ok_or(Fail::Arg("verdict is null"))?;
        let e = s.inner.e_points(32)?;
        let scan = theta_scan(&s.inner, &q, &e, r, &EstimateOptions::default())?;
        *out = match classify(&scan, &q)?.verdict {
            Verdict::Compact => EcVerdict::Compact,
            Verdict::Bounded => EcVerdict::Bounded,
            Verdict::NotCompact => EcVerdict::NotCompact,
            Verdict::NotBounded => EcVerdict::NotBounded,
            Verdict::Inconclusive => EcVerdict::Inconclusive,
        };
        Ok(())
    })
}

/// Threshold q with q(s - alpha p) < sigma p; writes INFINITY when every q
/// qualifies.
///
/// # Safety
/// `q_sup` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_critical_exponent(s: f64, sigma: f64, alpha: f64, p: f64, q_sup: *mut f64) -> EcStatus {
    guard(|| {
        let out = q_sup.as_mut().ok_or(Fail::Arg("q_sup is null"))?;
        *out = critical_exponents(s, sigma, alpha, p)?.q_bounded_sup.unwrap_or(f64::INFINITY);
        Ok(())
    })
}

/// Cusp exponent theta for weights x_n^alpha, x_n^beta.
///
/// # Safety
/// `theta` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_cusp_exponent(
    n: usize,
    gamma: f64,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    theta: *mut f64,
) -> EcStatus {
    guard(|| {
        let out = theta.as_mut().ok_or(Fail::Arg("theta is null"))?;
        *out = cusp_exponent(n, gamma, alpha, beta, p, q)?;
        Ok(())
    })
}

/// Runs a named scenario. `params_json` is a JSON object of numeric
/// parameters, or null for defaults. The report is written as a new JSON
/// string to `*report_json`, to be released with `ec_string_free`.
///
/// # Safety
/// Strings must be NUL-terminated; `report_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_scenario_run(
    id: *const c_char,
    params_json: *const c_char,
    seed: u64,
    report_json: *mut *mut c_char,
) -> EcStatus {
    guard(|| {
        if report_json.is_null() {
            return Err(Fail::Arg("report_json is null"));
        }
        *report_json = ptr::null_mut();
        let id: ScenarioId = str_arg(id, "id is null or not UTF-8")?.parse()?;
        let params: BTreeMap<String, f64> = if params_json.is_null() {
            BTreeMap::new()
        } else {
            serde_json::from_str(str_arg(params_json, "params_json is not UTF-8")?).map_err(Error::from)?
        };
        let rep = run_scenario(id, &params, seed)?;
        let text = serde_json::to_string(&rep).map_err(Error::from)?;
        *report_json = CString::new(text).map_err(|_| Fail::Arg("report contains NUL"))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
