//! C ABI over the `impatient` library.
//!
//! Every fallible function returns an [`ImpStatus`] and writes its result
//! through an out pointer. After a non-zero status,
//! [`imp_last_error_message`] describes the failure on the calling thread.
//! Curves and samplers are opaque handles released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use impatient::automata::{estimate_accessibility, korshunov_constant};
use impatient::curve::{solve_completion_curve, Curve};
use impatient::sampler::ConditionedSampler;
use impatient::specialfn::{lambert_w0, rho_of_lambda, xi_of_lambda};
use impatient::stirling::{self, logdp, BackendKind, StirlingBackend, EXACT_AUTO_MAX_N};
use impatient::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Argument = 3,
    Resource = 4,
    BackendWindow = 5,
    Numeric = 6,
    Panic = 7,
}

/// Stirling backend selector. `Auto` picks exact arithmetic up to 300 and
/// log-space arithmetic above that.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpBackend {
    Auto = 0,
    Exact = 1,
    LogDp = 2,
    Saddle = 3,
}

/// A solved completion curve.
pub struct ImpCurve(Curve);

/// A conditioned collector sampler with its transition table.
pub struct ImpSampler(ConditionedSampler);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ImpStatus {
    match e {
        Error::Domain(_) => ImpStatus::Domain,
        Error::Argument(_) | Error::Shape(_) => ImpStatus::Argument,
        Error::Resource(_) => ImpStatus::Resource,
        Error::BackendWindow(_) => ImpStatus::BackendWindow,
        Error::Quadrature(_) | Error::InvariantViolation(_) | Error::AttemptsExhausted(_) => ImpStatus::Numeric,
    }
}

fn fail(status: ImpStatus, msg: impl Into<String>) -> ImpStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), ImpStatus>) -> ImpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ImpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(ImpStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: impatient::Result<T>) -> Result<T, ImpStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T) -> Result<(), ImpStatus> {
    if p.is_null() {
        Err(fail(ImpStatus::NullPointer, "null pointer argument"))
    } else {
        Ok(())
    }
}

fn backend_for(b: ImpBackend, n: u64) -> Result<StirlingBackend, ImpStatus> {
    match b {
        ImpBackend::Auto => lib(StirlingBackend::auto(n)),
        ImpBackend::Exact => Ok(StirlingBackend::from_kind(BackendKind::Exact)),
        ImpBackend::LogDp => Ok(StirlingBackend::from_kind(BackendKind::LogDp)),
        ImpBackend::Saddle => Ok(StirlingBackend::from_kind(BackendKind::Saddle)),
    }
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn imp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn write_scalar(out: *mut f64, f: impl FnOnce() -> impatient::Result<f64>) -> ImpStatus {
    guard(|| {
        non_null(out)?;
        let v = lib(f())?;
        // SAFETY: checked non-null; the caller guarantees it is writable
        unsafe { *out = v };
        Ok(())
    })
}

/// Principal branch of the Lambert W function on `[-1/e, inf)`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn imp_lambert_w0(z: f64, out: *mut f64) -> ImpStatus {
    write_scalar(out, || lambert_w0(z))
}

/// Positive root of `xi = (1 + lambda)(1 - exp(-xi))`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn imp_xi_of_lambda(lambda: f64, out: *mut f64) -> ImpStatus {
    write_scalar(out, || xi_of_lambda(lambda))
}

/// `exp(-xi(lambda))`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn imp_rho_of_lambda(lambda: f64, out: *mut f64) -> ImpStatus {
    write_scalar(out, || rho_of_lambda(lambda))
}

/// `1 - k exp(-xi(k - 1))`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn imp_korshunov_constant(k: u32, out: *mut f64) -> ImpStatus {
    write_scalar(out, || korshunov_constant(k))
}

/// Natural log of the Stirling number of the second kind; `-inf` when it
/// is zero.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn imp_stirling_ln(m: u64, l: u64, out: *mut f64) -> ImpStatus {
    write_scalar(out, || logdp::stirling_ln(m, l))
}

/// `S(m-1, l-1) / S(m, l)` with the chosen backend.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn imp_ratio_r(m: u64, l: u64, backend: ImpBackend, out: *mut f64) -> ImpStatus {
    guard(|| {
        non_null(out)?;
        let b = match backend {
            ImpBackend::Auto if m > EXACT_AUTO_MAX_N => StirlingBackend::LogDp,
            _ => backend_for(backend, m)?,
        };
        let v = lib(stirling::ratio_r(m, l, &b))?;
        // SAFETY: checked non-null
        unsafe { *out = v };
        Ok(())
    })
}

/// Exact `S(m, l)` as a decimal string. Free the result with
/// [`imp_string_free`].
///
/// # Safety
/// `out` must be NULL or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn imp_stirling_exact(m: u64, l: u64, out: *mut *mut c_char) -> ImpStatus {
    guard(|| {
        non_null(out)?;
        let s = lib(stirling::stirling_exact(m, l))?.to_string();
        let c = CString::new(s).map_err(|e| fail(ImpStatus::Numeric, e.to_string()))?;
        // SAFETY: checked non-null
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn imp_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the caller passes back a pointer from CString::into_raw
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Monte-Carlo fraction of accessible structures for alphabet size `k` and
/// `n` states.
///
/// # Safety
/// `estimate` and `stderr_out` must be NULL or writable doubles.
#[no_mangle]
pub unsafe extern "C" fn imp_estimate_accessibility(
    k: u32,
    n: u32,
    trials: u64,
    seed: u64,
    estimate: *mut f64,
    stderr_out: *mut f64,
) -> ImpStatus {
    guard(|| {
        non_null(estimate)?;
        non_null(stderr_out)?;
        let e = lib(estimate_accessibility(k, n, trials, seed))?;
        // SAFETY: both checked non-null
        unsafe {
            *estimate = e.estimate;
            *stderr_out = e.stderr;
        }
        Ok(())
    })
}

/// Solves the completion curve for `nu` down to `x = a` with RK4 step
/// `step`.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn imp_curve_solve(nu: f64, a: f64, step: f64, out: *mut *mut ImpCurve) -> ImpStatus {
    guard(|| {
        non_null(out)?;
        let c = lib(solve_completion_curve(nu, a, step))?;
        // SAFETY: checked non-null
        unsafe { *out = Box::into_raw(Box::new(ImpCurve(c))) };
        Ok(())
    })
}

/// Number of grid points, or 0 for NULL.
///
/// # Safety
/// `curve` must be NULL or a live handle from [`imp_curve_solve`].
#[no_mangle]
pub unsafe extern "C" fn imp_curve_len(curve: *const ImpCurve) -> usize {
    // SAFETY: caller contract
    unsafe { curve.as_ref() }.map_or(0, |c| c.0.points.len())
}

/// Grid point `i`; points run from `x = 1 + nu` down to `x = a`.
///
/// # Safety
/// `curve` must be NULL or a live handle; `x` and `y` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn imp_curve_point(curve: *const ImpCurve, i: usize, x: *mut f64, y: *mut f64) -> ImpStatus {
    guard(|| {
        non_null(curve)?;
        non_null(x)?;
        non_null(y)?;
        // SAFETY: checked non-null; caller guarantees the handle is live
        let c = unsafe { &(*curve).0 };
        let Some(&(px, py)) = c.points.get(i) else {
            return Err(fail(ImpStatus::Argument, format!("index {i} out of {} points", c.points.len())));
        };
        // SAFETY: checked non-null
        unsafe {
            *x = px;
            *y = py;
        }
        Ok(())
    })
}

/// Interpolated `y(x)` for `a <= x <= 1 + nu`.
///
/// # Safety
/// `curve` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn imp_curve_eval(curve: *const ImpCurve, x: f64, out: *mut f64) -> ImpStatus {
    guard(|| {
        non_null(curve)?;
        non_null(out)?;
        // SAFETY: checked non-null; caller guarantees the handle is live
        let v = lib(unsafe { &(*curve).0 }.eval(x))?;
        unsafe { *out = v };
        Ok(())
    })
}

/// # Safety
/// `curve` must be NULL or a handle from [`imp_curve_solve`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn imp_curve_free(curve: *mut ImpCurve) {
    if !curve.is_null() {
        // SAFETY: the handle came from Box::into_raw
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Builds a sampler for the collector conditioned on finishing within
/// `big_n` draws of `n` coupons.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn imp_sampler_new(
    big_n: u64,
    n: u64,
    backend: ImpBackend,
    out: *mut *mut ImpSampler,
) -> ImpStatus {
    guard(|| {
        non_null(out)?;
        let b = backend_for(backend, n)?;
        let s = lib(ConditionedSampler::new(big_n, n, &b))?;
        // SAFETY: checked non-null
        unsafe { *out = Box::into_raw(Box::new(ImpSampler(s))) };
        Ok(())
    })
}

/// Writes the forward completion path `y_0 = 0, ..., y_N = n` (`N + 1`
/// values) of the trajectory for `(seed, stream)` into `y`.
///
/// # Safety
/// `sampler` must be NULL or a live handle; `y` NULL or writable for `len`
/// values.
#[no_mangle]
pub unsafe extern "C" fn imp_sampler_sample(
    sampler: *const ImpSampler,
    seed: u64,
    stream: u64,
    y: *mut u32,
    len: usize,
) -> ImpStatus {
    guard(|| {
        non_null(sampler)?;
        non_null(y)?;
        // SAFETY: checked non-null; caller guarantees the handle is live
        let s = unsafe { &(*sampler).0 };
        let need = s.dims().0 as usize + 1;
        if len < need {
            return Err(fail(ImpStatus::Argument, format!("buffer holds {len} values, need {need}")));
        }
        let path = s.sample(seed, stream).forward();
        // SAFETY: y is writable for len >= path.len() values
        unsafe { ptr::copy_nonoverlapping(path.as_ptr(), y, path.len()) };
        Ok(())
    })
}

/// # Safety
/// `sampler` must be NULL or a handle from [`imp_sampler_new`], not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn imp_sampler_free(sampler: *mut ImpSampler) {
    if !sampler.is_null() {
        // SAFETY: the handle came from Box::into_raw
        drop(unsafe { Box::from_raw(sampler) });
    }
}
