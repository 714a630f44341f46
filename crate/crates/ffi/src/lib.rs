//! C interface to `hnls-core`.
//!
//! Configurations and solution fields are opaque handles owned by the
//! caller and released with the matching `*_free` function. Every fallible
//! call returns an [`HnlsStatus`]; on failure the message is available from
//! [`hnls_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hnls_core::cli::{self, EXIT_BAD_CONFIG};
use hnls_core::config::RunConfig;
use hnls_core::{Error, SpaceTimeField};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BadConfig = 3,
    NumericalFailure = 4,
    OutOfBounds = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque run configuration.
pub struct HnlsConfig(RunConfig);

/// Opaque space-time solution field, stored time-major.
pub struct HnlsField(SpaceTimeField);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: HnlsStatus, msg: impl Into<String>) -> HnlsStatus {
    set_error(msg);
    status
}

fn from_core(err: Error) -> HnlsStatus {
    let status = if cli::exit_code(&err) == EXIT_BAD_CONFIG {
        HnlsStatus::BadConfig
    } else {
        HnlsStatus::NumericalFailure
    };
    fail(status, err.to_string())
}

fn guard(f: impl FnOnce() -> HnlsStatus) -> HnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(HnlsStatus::Panic, "internal panic"),
    }
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hnls_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hnls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration. Never null.
#[no_mangle]
pub extern "C" fn hnls_config_default() -> *mut HnlsConfig {
    Box::into_raw(Box::new(HnlsConfig(RunConfig::default())))
}

/// Parses a JSON configuration and validates it. Relative CSV paths in
/// profiles resolve against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hnls_config_from_json(json: *const c_char, out: *mut *mut HnlsConfig) -> HnlsStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(HnlsStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(HnlsStatus::InvalidUtf8, "configuration is not valid UTF-8");
        };
        match RunConfig::from_json(text).and_then(|c| c.validate().map(|_| c)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(HnlsConfig(cfg)));
                HnlsStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hnls_config_free(cfg: *mut HnlsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn solve(
    cfg: *const HnlsConfig,
    out: *mut *mut HnlsField,
    f: impl FnOnce(&RunConfig) -> hnls_core::Result<SpaceTimeField>,
) -> HnlsStatus {
    guard(|| {
        if cfg.is_null() || out.is_null() {
            return fail(HnlsStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        match f(&(*cfg).0) {
            Ok(field) => {
                *out = Box::into_raw(Box::new(HnlsField(field)));
                HnlsStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Solves the linear problem (`κ` ignored) on `[0, L] × [0, T]`.
///
/// # Safety
/// `cfg` must be a live configuration handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hnls_solve_linear(cfg: *const HnlsConfig, out: *mut *mut HnlsField) -> HnlsStatus {
    solve(cfg, out, |c| cli::linear_solution(c).map(|(u, _)| u))
}

/// Solves the nonlinear problem by Picard iteration. `iterations` may be
/// null; otherwise it receives the total iteration count.
///
/// # Safety
/// `cfg` must be a live configuration handle; `out` must be writable;
/// `iterations` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hnls_solve_nonlinear(
    cfg: *const HnlsConfig,
    out: *mut *mut HnlsField,
    iterations: *mut usize,
) -> HnlsStatus {
    solve(cfg, out, |c| {
        let (u, diag) = cli::nonlinear_solution(c)?;
        if !iterations.is_null() {
            *iterations = diag.iterations;
        }
        Ok(u)
    })
}

/// Runs the spectral verification suite; `passed` receives 1 when every
/// check holds and 0 otherwise.
///
/// # Safety
/// `cfg` must be a live configuration handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hnls_verify_spectral(cfg: *const HnlsConfig, passed: *mut i32) -> HnlsStatus {
    guard(|| {
        if cfg.is_null() || passed.is_null() {
            return fail(HnlsStatus::NullPointer, "null argument");
        }
        let cfg = &(*cfg).0;
        match cfg.pde_params() {
            Ok(params) => {
                let checks = cli::verify_spectral(&params, cfg.seed, 10_000);
                *passed = checks.iter().all(|c| c.pass) as i32;
                HnlsStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Number of spatial points. Returns 0 for null.
///
/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn hnls_field_nx(field: *const HnlsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.nx)
}

/// Number of time levels. Returns 0 for null.
///
/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn hnls_field_nt(field: *const HnlsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.nt)
}

/// Value at spatial index `i` and time index `n`.
///
/// # Safety
/// `field` must be a live field handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hnls_field_value(
    field: *const HnlsField,
    i: usize,
    n: usize,
    re: *mut f64,
    im: *mut f64,
) -> HnlsStatus {
    if field.is_null() || re.is_null() || im.is_null() {
        return fail(HnlsStatus::NullPointer, "null argument");
    }
    let f = &(*field).0;
    if i >= f.nx || n >= f.nt {
        return fail(HnlsStatus::OutOfBounds, format!("index ({i}, {n}) outside {} x {}", f.nx, f.nt));
    }
    let v = f.at(i, n);
    *re = v.re;
    *im = v.im;
    HnlsStatus::Ok
}

/// Copies all values, time-major (`n * nx + i`), into separate real and
/// imaginary buffers of `len` entries each.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hnls_field_copy(field: *const HnlsField, re: *mut f64, im: *mut f64, len: usize) -> HnlsStatus {
    if field.is_null() || re.is_null() || im.is_null() {
        return fail(HnlsStatus::NullPointer, "null argument");
    }
    let f = &(*field).0;
    if len < f.values.len() {
        return fail(HnlsStatus::BufferTooSmall, format!("need {} entries, got {len}", f.values.len()));
    }
    for (j, v) in f.values.iter().enumerate() {
        *re.add(j) = v.re;
        *im.add(j) = v.im;
    }
    HnlsStatus::Ok
}

/// Releases a field. Null is ignored.
///
/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hnls_field_free(field: *mut HnlsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}
