//! C interface to `stpp`.
//!
//! Objects are opaque handles created by `stpp_*_new`/`stpp_*_read`/fit calls
//! and released with the matching `*_free`. Every fallible call returns a
//! [`StppStatus`]; on failure `stpp_last_error()` describes the cause until
//! the next call on the same thread. Events are 0-based in this interface.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stpp::diagnostics::{globaldiag, localtest, LocalTestOptions};
use stpp::fit::{stppm, FittedPoissonModel, Method, StppmOptions};
use stpp::formula::parse_formula;
use stpp::geometry::{Event, PointPattern, SpatialWindow, TimeInterval};
use stpp::lgcp::{stlgcppm, CovFamily, LgcpOptions};
use stpp::simulate::{sim_poisson, IntensitySpec, SimDomain};
use stpp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// A fit or optimizer failed to produce an estimate.
    NumericalFailure = 3,
    Io = 4,
    OutOfRange = 5,
    /// The output buffer is shorter than required; nothing was written.
    BufferTooSmall = 6,
    Panic = 7,
}

pub struct StppPattern {
    inner: PointPattern,
}

pub struct StppPoissonFit {
    inner: FittedPoissonModel,
}

/// Regression method of `stpp_fit_poisson`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StppMethod {
    Glm = 0,
    Lsr = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StppStatus {
    match e {
        Error::Io(_) => StppStatus::Io,
        Error::IdOutOfRange { .. } | Error::InvalidSegment(_) => StppStatus::OutOfRange,
        Error::RankDeficient(_)
        | Error::Divergence(_)
        | Error::MaxIterations(_)
        | Error::Stagnation(_)
        | Error::NotPositiveDefinite(_)
        | Error::Subcriticality(_) => StppStatus::NumericalFailure,
        _ => StppStatus::InvalidInput,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (StppStatus, String)>) -> StppStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StppStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            StppStatus::Panic
        }
    }
}

fn lib<T>(r: stpp::Result<T>) -> Result<T, (StppStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (StppStatus, String) {
    (StppStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, (StppStatus, String)> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| (StppStatus::InvalidInput, "string is not valid UTF-8".into()))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize) -> Result<&'a [f64], (StppStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], (StppStatus, String)> {
    if need > len {
        return Err((StppStatus::BufferTooSmall, format!("buffer holds {len} values, {need} required")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn pattern_ref<'a>(p: *const StppPattern) -> Result<&'a PointPattern, (StppStatus, String)> {
    p.as_ref().map(|p| &p.inner).ok_or_else(null)
}

fn domain(window: [f64; 4], interval: [f64; 2]) -> Result<(SpatialWindow, TimeInterval), (StppStatus, String)> {
    Ok((
        lib(SpatialWindow::new(window[0], window[1], window[2], window[3]))?,
        lib(TimeInterval::new(interval[0], interval[1]))?,
    ))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `stpp_*` call on the thread.
#[no_mangle]
pub extern "C" fn stpp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stpp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a planar pattern from coordinate arrays of length `n`.
/// `window` is `x0, x1, y0, y1` and `interval` is `t0, t1`.
///
/// # Safety
/// `x`, `y`, `t` must point to `n` readable doubles, `window` to 4,
/// `interval` to 2, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stpp_pattern_new(
    x: *const f64,
    y: *const f64,
    t: *const f64,
    n: usize,
    window: *const f64,
    interval: *const f64,
    out: *mut *mut StppPattern,
) -> StppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let (xs, ys, ts) = (slice_arg(x, n)?, slice_arg(y, n)?, slice_arg(t, n)?);
        let w = slice_arg(window, 4)?;
        let iv = slice_arg(interval, 2)?;
        let (w, iv) = domain([w[0], w[1], w[2], w[3]], [iv[0], iv[1]])?;
        let events = (0..n).map(|i| Event { x: xs[i], y: ys[i], t: ts[i] }).collect();
        let p = lib(PointPattern::new(events, w, iv))?;
        *out = Box::into_raw(Box::new(StppPattern { inner: p }));
        Ok(())
    })
}

/// Reads a pattern CSV (`x,y,t[,marks]`); the domain is the data range.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stpp_pattern_read_csv(path: *const c_char, out: *mut *mut StppPattern) -> StppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let p = lib(stpp::io::read_pattern_file(Path::new(str_arg(path)?), None, None, None))?;
        *out = Box::into_raw(Box::new(StppPattern { inner: p }));
        Ok(())
    })
}

/// # Safety
/// `pattern` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn stpp_pattern_write_csv(pattern: *const StppPattern, path: *const c_char) -> StppStatus {
    guard(|| {
        let p = pattern_ref(pattern)?;
        let f = std::fs::File::create(str_arg(path)?).map_err(|e| (StppStatus::Io, e.to_string()))?;
        lib(stpp::io::write_pattern_csv(p, std::io::BufWriter::new(f)))
    })
}

/// Number of events; 0 for a null handle.
///
/// # Safety
/// `pattern` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stpp_pattern_len(pattern: *const StppPattern) -> usize {
    pattern.as_ref().map_or(0, |p| p.inner.len())
}

/// Copies the coordinates into three buffers of at least `len` doubles.
///
/// # Safety
/// `pattern` must be a live handle; each buffer must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stpp_pattern_coords(
    pattern: *const StppPattern,
    x: *mut f64,
    y: *mut f64,
    t: *mut f64,
    len: usize,
) -> StppStatus {
    guard(|| {
        let p = pattern_ref(pattern)?;
        let n = p.len();
        let (xs, ys, ts) = (out_slice(x, len, n)?, out_slice(y, len, n)?, out_slice(t, len, n)?);
        for (i, e) in p.events().iter().enumerate() {
            xs[i] = e.x;
            ys[i] = e.y;
            ts[i] = e.t;
        }
        Ok(())
    })
}

/// # Safety
/// `pattern` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stpp_pattern_free(pattern: *mut StppPattern) {
    if !pattern.is_null() {
        drop(Box::from_raw(pattern));
    }
}

/// Homogeneous Poisson pattern with intensity `lambda` on a box.
///
/// # Safety
/// `window` must point to 4 doubles, `interval` to 2, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn stpp_sim_poisson(
    lambda: f64,
    window: *const f64,
    interval: *const f64,
    seed: u64,
    out: *mut *mut StppPattern,
) -> StppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let w = slice_arg(window, 4)?;
        let iv = slice_arg(interval, 2)?;
        let (window, interval) = domain([w[0], w[1], w[2], w[3]], [iv[0], iv[1]])?;
        let sim = lib(sim_poisson(&IntensitySpec::Constant(lambda), &SimDomain::Planar { window, interval }, seed))?;
        *out = Box::into_raw(Box::new(StppPattern { inner: sim.pattern }));
        Ok(())
    })
}

/// Fits a log-linear Poisson model such as `"~ x + t"`.
///
/// # Safety
/// `pattern` must be a live handle, `formula` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_poisson(
    pattern: *const StppPattern,
    formula: *const c_char,
    method: StppMethod,
    seed: u64,
    out: *mut *mut StppPoissonFit,
) -> StppStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let p = pattern_ref(pattern)?;
        let f = lib(parse_formula(str_arg(formula)?))?;
        let opts = StppmOptions {
            method: match method {
                StppMethod::Glm => Method::Glm,
                StppMethod::Lsr => Method::Lsr,
            },
            seed,
            ..StppmOptions::default()
        };
        let m = lib(stppm(p, &f, &[], &opts))?;
        *out = Box::into_raw(Box::new(StppPoissonFit { inner: m }));
        Ok(())
    })
}

/// Number of coefficients; 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_num_coefficients(fit: *const StppPoissonFit) -> usize {
    fit.as_ref().map_or(0, |f| f.inner.coefficients.len())
}

/// # Safety
/// `fit` must be a live handle and `buf` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_coefficients(fit: *const StppPoissonFit, buf: *mut f64, len: usize) -> StppStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(null)?;
        out_slice(buf, len, f.inner.coefficients.len())?.copy_from_slice(&f.inner.coefficients);
        Ok(())
    })
}

/// Fitted intensity at each event.
///
/// # Safety
/// `fit` must be a live handle and `buf` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_fitted(fit: *const StppPoissonFit, buf: *mut f64, len: usize) -> StppStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(null)?;
        out_slice(buf, len, f.inner.fitted.len())?.copy_from_slice(&f.inner.fitted);
        Ok(())
    })
}

/// Full model as JSON; release with `stpp_string_free`. Null on failure.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_to_json(fit: *const StppPoissonFit) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let f = fit.as_ref().ok_or_else(null)?;
        let s = serde_json::to_string(&f.inner).map_err(|e| (StppStatus::InvalidInput, e.to_string()))?;
        out = CString::new(s).map_err(|e| (StppStatus::InvalidInput, e.to_string()))?.into_raw();
        Ok(())
    });
    out
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_free(fit: *mut StppPoissonFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stpp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sum of squared differences between the intensity-weighted K-function and
/// its Poisson value on the default lag grid.
///
/// # Safety
/// `pattern` must be a live handle, `lambda` hold one value per event and
/// `sum_sq` be writable.
#[no_mangle]
pub unsafe extern "C" fn stpp_globaldiag(
    pattern: *const StppPattern,
    lambda: *const f64,
    n: usize,
    sum_sq: *mut f64,
) -> StppStatus {
    guard(|| {
        let p = pattern_ref(pattern)?;
        if sum_sq.is_null() {
            return Err(null());
        }
        let res = lib(globaldiag(p, slice_arg(lambda, n)?, None))?;
        *sum_sq = res.sum_sq;
        Ok(())
    })
}

/// Local permutation test of `x` against `z` with the K-function; writes one
/// p-value per event of `x`.
///
/// # Safety
/// `x` and `z` must be live handles and `p_values` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stpp_localtest(
    x: *const StppPattern,
    z: *const StppPattern,
    k: usize,
    alpha: f64,
    seed: u64,
    p_values: *mut f64,
    len: usize,
) -> StppStatus {
    guard(|| {
        let (x, z) = (pattern_ref(x)?, pattern_ref(z)?);
        let out = out_slice(p_values, len, x.len())?;
        let opts = LocalTestOptions { k, alpha, seed, ..LocalTestOptions::default() };
        let res = lib(localtest(x, z, &opts))?;
        out.copy_from_slice(&res.p_values);
        Ok(())
    })
}

/// Homogeneous LGCP fit by minimum contrast; writes `sigma, alpha, beta`.
/// `family` is `"sep-exp"`, `"gneiting"` or `"iaco-cesare"`.
///
/// # Safety
/// `pattern` must be a live handle, `family` a NUL-terminated string and
/// `params` hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn stpp_fit_lgcp(
    pattern: *const StppPattern,
    family: *const c_char,
    seed: u64,
    params: *mut f64,
) -> StppStatus {
    guard(|| {
        let p = pattern_ref(pattern)?;
        let fam = lib(CovFamily::from_name(str_arg(family)?))?;
        let out = out_slice(params, 3, 3)?;
        let opts = LgcpOptions { family: fam, seed, ..LgcpOptions::default() };
        let fit = lib(stlgcppm(p, &stpp::formula::Formula::intercept_only(), &[], &opts))?;
        let g = fit.global_params().ok_or_else(|| (StppStatus::NumericalFailure, "no global estimate".to_string()))?;
        out.copy_from_slice(&g.as_array());
        Ok(())
    })
}
