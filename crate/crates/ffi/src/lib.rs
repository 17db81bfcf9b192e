//! C ABI for berg-op-lab.
//!
//! Configs and reports cross the boundary as opaque handles. Every fallible call
//! returns a [`BolStatus`]; on failure the message is available from
//! [`bol_last_error`] until the next failing call on the same thread. Strings
//! returned through `char **` out-parameters are owned by the caller and must be
//! released with [`bol_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use berg_op_lab::config::{emit, parse_config, RunConfig};
use berg_op_lab::error::Error;
use berg_op_lab::geometry::pseudo_distance;
use berg_op_lab::report::Report;
use berg_op_lab::run::{run, status};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BolStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    NullOrInvalidArgument = 1,
    /// The run configuration failed to parse or validate.
    Config = 2,
    /// A parameter was out of range (point outside the disk, bad exponent, ...).
    InvalidParameter = 3,
    /// A computation failed or produced non-finite values.
    Numerical = 4,
    /// Reading or writing a file failed.
    Io = 5,
    /// The requested quantity or verdict is not in the report.
    NotFound = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Parsed and validated run configuration.
pub struct BolConfig {
    inner: RunConfig,
}

/// Finished run report.
pub struct BolReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: BolStatus, msg: impl Into<String>) -> BolStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> BolStatus {
    match e {
        Error::Config(_) => BolStatus::Config,
        Error::Io(_) => BolStatus::Io,
        Error::Numerical(_) | Error::NonFiniteIntegrand { .. } | Error::TruncationTail { .. } | Error::BoundaryProximity { .. } => BolStatus::Numerical,
        _ => BolStatus::InvalidParameter,
    }
}

fn from_error(e: Error) -> BolStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, converting panics into [`BolStatus::Panic`].
fn guard(f: impl FnOnce() -> BolStatus) -> BolStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(BolStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, BolStatus> {
    if s.is_null() {
        return Err(fail(BolStatus::NullOrInvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(BolStatus::NullOrInvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> BolStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            BolStatus::Ok
        }
        Err(_) => fail(BolStatus::Numerical, "output contains an interior NUL byte"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(BolStatus::NullOrInvalidArgument, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message of the last failing call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bol_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bol_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer returned through a `char **` out-parameter of this library.
#[no_mangle]
pub unsafe extern "C" fn bol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a TOML run configuration. Any rejection is reported as
/// [`BolStatus::Config`].
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_config_parse(toml: *const c_char, out: *mut *mut BolConfig) -> BolStatus {
    non_null!(out);
    guard(|| {
        let text = match read_str(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BolConfig { inner }));
                BolStatus::Ok
            }
            Err(e) => fail(BolStatus::Config, e.to_string()),
        }
    })
}

/// Releases a config. Null is ignored.
///
/// # Safety
/// `cfg` must be null or a handle from [`bol_config_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bol_config_free(cfg: *mut BolConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Replaces the seed of randomized checks.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn bol_config_set_seed(cfg: *mut BolConfig, seed: u64) -> BolStatus {
    non_null!(cfg);
    (*cfg).inner.numerics.seed = seed;
    BolStatus::Ok
}

/// The config with all defaults filled in, as TOML.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_config_emit(cfg: *const BolConfig, out: *mut *mut c_char) -> BolStatus {
    non_null!(cfg, out);
    guard(|| match emit(&(*cfg).inner) {
        Ok(s) => write_string(out, s),
        Err(e) => from_error(e),
    })
}

/// Runs the config's task. No report file is written.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_run(cfg: *const BolConfig, out: *mut *mut BolReport) -> BolStatus {
    non_null!(cfg, out);
    guard(|| match run(&(*cfg).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(BolReport { inner }));
            BolStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// Parses `toml`, runs it and returns the JSON report. `exit_code` receives the
/// command-line exit status of the run (0 clean, 2 some verdict indeterminate).
///
/// # Safety
/// `toml` must be a NUL-terminated string; `json` and `exit_code` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bol_run_config(toml: *const c_char, json: *mut *mut c_char, exit_code: *mut i32) -> BolStatus {
    non_null!(json, exit_code);
    let mut cfg = ptr::null_mut();
    let s = bol_config_parse(toml, &mut cfg);
    if s != BolStatus::Ok {
        return s;
    }
    let mut report = ptr::null_mut();
    let s = bol_run(cfg, &mut report);
    bol_config_free(cfg);
    if s != BolStatus::Ok {
        return s;
    }
    *exit_code = bol_report_exit_code(report);
    let s = bol_report_json(report, json);
    bol_report_free(report);
    s
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle from [`bol_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bol_report_free(report: *mut BolReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Serializes a report as JSON.
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_report_json(report: *const BolReport, out: *mut *mut c_char) -> BolStatus {
    non_null!(report, out);
    guard(|| match (*report).inner.to_json() {
        Ok(s) => write_string(out, s),
        Err(e) => from_error(e),
    })
}

/// Serializes a report as CSV.
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_report_csv(report: *const BolReport, out: *mut *mut c_char) -> BolStatus {
    non_null!(report, out);
    guard(|| match (*report).inner.to_csv() {
        Ok(s) => write_string(out, s),
        Err(e) => from_error(e),
    })
}

/// Looks up a named quantity.
///
/// # Safety
/// `report` must be a live report handle, `name` a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_report_quantity(report: *const BolReport, name: *const c_char, out: *mut f64) -> BolStatus {
    non_null!(report, out);
    let name = match read_str(name, "name") {
        Ok(n) => n,
        Err(s) => return s,
    };
    match (*report).inner.get(name) {
        Some(v) => {
            *out = v;
            BolStatus::Ok
        }
        None => fail(BolStatus::NotFound, format!("no quantity named '{name}'")),
    }
}

/// Looks up a named verdict.
///
/// # Safety
/// `report` must be a live report handle, `name` a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_report_verdict(report: *const BolReport, name: *const c_char, out: *mut *mut c_char) -> BolStatus {
    non_null!(report, out);
    let name = match read_str(name, "name") {
        Ok(n) => n,
        Err(s) => return s,
    };
    match (*report).inner.verdict_of(name) {
        Some(v) => write_string(out, v.to_string()),
        None => fail(BolStatus::NotFound, format!("no verdict named '{name}'")),
    }
}

/// 1 if every cross-check of the report agrees, 0 otherwise, -1 for a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn bol_report_coherent(report: *const BolReport) -> i32 {
    if report.is_null() {
        return -1;
    }
    (*report).inner.coherent() as i32
}

/// Command-line exit status of the report: 0 if every verdict is definite, 2
/// otherwise, -1 for a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn bol_report_exit_code(report: *const BolReport) -> i32 {
    if report.is_null() {
        return -1;
    }
    status(&(*report).inner).code()
}

/// Pseudo-hyperbolic distance between two points of the unit disk.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bol_pseudo_distance(z_re: f64, z_im: f64, w_re: f64, w_im: f64, out: *mut f64) -> BolStatus {
    non_null!(out);
    match pseudo_distance(Complex64::new(z_re, z_im), Complex64::new(w_re, w_im)) {
        Ok(d) => {
            *out = d;
            BolStatus::Ok
        }
        Err(e) => from_error(e),
    }
}
