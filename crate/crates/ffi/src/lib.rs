//! C ABI over the `gaussharm` toolkit.
//!
//! Conventions:
//!
//! * every function returns a [`GhStatus`]; results are written through out-pointers;
//! * on failure a message is kept per thread and read with [`gh_last_error_message`];
//! * test functions are opaque [`GhTestFunction`] handles released with [`gh_test_function_free`];
//! * structured results are returned as NUL-terminated JSON strings released with [`gh_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gaussharm::covering::{cover_admissible, CoverOptions, CoverParams};
use gaussharm::measure::{gamma_ball, gamma_cube, Ball, Point};
use gaussharm::semigroup::ou_apply;
use gaussharm::verify::{run_suite, VerifyConfig};
use gaussharm::{Error, TestFunction};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    BudgetExhausted = 4,
    Config = 5,
    Io = 6,
    Utf8 = 7,
    Panic = 8,
}

/// Opaque handle to a closed-form test function.
pub struct GhTestFunction(TestFunction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GhStatus {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::OutsideGrid(_) | Error::DepthExceeded(_) => {
            GhStatus::InvalidArgument
        }
        Error::Dimension(_) => GhStatus::Dimension,
        Error::BudgetExhausted { .. } => GhStatus::BudgetExhausted,
        Error::Config(_) | Error::UnknownCorpusEntry(_) | Error::Json(_) => GhStatus::Config,
        Error::Io(_) => GhStatus::Io,
    }
}

struct Fail(GhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GhStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            GhStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(GhStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(GhStatus::Utf8, format!("{what}: {e}")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Fail(GhStatus::InvalidArgument, e.to_string()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<*mut c_char, Fail> {
    let s = serde_json::to_string(v).map_err(|e| Fail::from(Error::from(e)))?;
    to_c_string(s)
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn gh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `m(x) = min(1, 1/|x|)`.
///
/// # Safety
/// `x` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gh_admissibility_m(x: *const f64, n: usize, out_value: *mut f64) -> GhStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        Point::new(x.to_vec())?;
        *out(out_value, "out_value")? = gaussharm::admissibility_m(x);
        Ok(())
    })
}

/// γ(B(center, radius)) to absolute tolerance `tol`, with its error bound.
///
/// # Safety
/// `center` must point to `n` doubles; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gh_gamma_ball(
    center: *const f64,
    n: usize,
    radius: f64,
    tol: f64,
    out_value: *mut f64,
    out_error: *mut f64,
) -> GhStatus {
    guard(|| {
        let c = slice(center, n, "center")?;
        let ball = Ball::new(Point::new(c.to_vec())?, radius)?;
        let est = gamma_ball(&ball, tol)?;
        *out(out_value, "out_value")? = est.value;
        if let Some(e) = out_error.as_mut() {
            *e = est.error;
        }
        Ok(())
    })
}

/// γ of the box `[lo, hi]`, with its error bound.
///
/// # Safety
/// `lo` and `hi` must point to `n` doubles; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gh_gamma_cube(
    lo: *const f64,
    hi: *const f64,
    n: usize,
    out_value: *mut f64,
    out_error: *mut f64,
) -> GhStatus {
    guard(|| {
        let est = gamma_cube(slice(lo, n, "lo")?, slice(hi, n, "hi")?)?;
        *out(out_value, "out_value")? = est.value;
        if let Some(e) = out_error.as_mut() {
            *e = est.error;
        }
        Ok(())
    })
}

/// Builds a test function from its JSON description, e.g.
/// `{"kind":"bump","center":[0.0],"radius":1.0,"height":1.0}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gh_test_function_new(spec_json: *const c_char, out_handle: *mut *mut GhTestFunction) -> GhStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let spec = serde_json::from_str(read_str(spec_json, "spec_json")?).map_err(|e| Fail::from(Error::from(e)))?;
        let u = TestFunction::new(spec)?;
        *slot = Box::into_raw(Box::new(GhTestFunction(u)));
        Ok(())
    })
}

/// Dimension of a test function.
///
/// # Safety
/// `handle` must be a live handle; `out_dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gh_test_function_dim(handle: *const GhTestFunction, out_dim: *mut usize) -> GhStatus {
    guard(|| {
        let u = handle.as_ref().ok_or_else(|| null("handle"))?;
        *out(out_dim, "out_dim")? = u.0.dim();
        Ok(())
    })
}

/// Releases a test function handle. NULL is ignored.
///
/// # Safety
/// `handle` must come from [`gh_test_function_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gh_test_function_free(handle: *mut GhTestFunction) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `e^{-tL}u(x)` and, if `out_grad` is non-NULL, its gradient (`n` doubles).
/// `quad_order` 0 selects the default Gauss–Hermite order.
///
/// # Safety
/// `handle` must be live; `x` must point to `n` doubles; `out_grad` is NULL or
/// points to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gh_ou_apply(
    handle: *const GhTestFunction,
    t: f64,
    x: *const f64,
    n: usize,
    quad_order: usize,
    out_value: *mut f64,
    out_grad: *mut f64,
) -> GhStatus {
    guard(|| {
        let u = handle.as_ref().ok_or_else(|| null("handle"))?;
        let x = slice(x, n, "x")?;
        let order = if quad_order == 0 { gaussharm::semigroup::DEFAULT_ORDER } else { quad_order };
        let h = ou_apply(&u.0, t, x, order)?;
        *out(out_value, "out_value")? = h.value;
        if !out_grad.is_null() {
            std::slice::from_raw_parts_mut(out_grad, n).copy_from_slice(&h.gradient);
        }
        Ok(())
    })
}

/// Admissible covering of `O = {0 < d(·, F) ≤ a·m}` for the finite set `F`
/// given as `count` points of dimension `n`, row-major. The result is JSON.
///
/// # Safety
/// `points` must point to `count * n` doubles; `out_json` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gh_cover_admissible(
    points: *const f64,
    count: usize,
    n: usize,
    a: f64,
    b: f64,
    c: f64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> GhStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        if count == 0 || n == 0 {
            return Err(Fail(GhStatus::InvalidArgument, "F must be non-empty".into()));
        }
        let flat = slice(points, count * n, "points")?;
        let pts: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
        let mut opts = CoverOptions::for_dim(n);
        opts.seed = seed;
        let res = cover_admissible(&pts, CoverParams { a, b, c }, &opts)?;
        *slot = json(&res)?;
        Ok(())
    })
}

/// Runs the verification suite for a JSON configuration (missing keys take
/// their defaults; `"{}"` is the default one-dimensional run) and returns the
/// report bundle as JSON. `out_all_pass` (nullable) receives 1 if no check failed.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gh_run_suite(config_json: *const c_char, out_json: *mut *mut c_char, out_all_pass: *mut i32) -> GhStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let cfg = VerifyConfig::from_json(read_str(config_json, "config_json")?)?;
        let bundle = run_suite(&cfg)?;
        *slot = to_c_string(bundle.to_json()?)?;
        if let Some(p) = out_all_pass.as_mut() {
            *p = i32::from(bundle.all_pass());
        }
        Ok(())
    })
}
