//! C ABI over the degen1d library: opaque handles, integer status codes, and
//! JSON passthrough for structured results.
//!
//! Conventions: every function returns a `Degen1dStatus`; outputs go through
//! out-pointers; handles are freed with their matching `*_free`; strings
//! returned by the library are freed with `degen1d_string_free`. The last
//! error message is kept per thread and read with `degen1d_last_error`.

use degen1d::classify::{Classifier, TrichotomyCase};
use degen1d::coeff::{Coefficient, DomainKind, Side};
use degen1d::error::Error;
use degen1d::scenario::{run_scenario, Scenario, Tolerances};
use degen1d::shoot;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degen1dStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainError = 3,
    Indeterminate = 4,
    NothingToCompare = 5,
    NumericalFailure = 6,
    ParseError = 7,
    IoError = 8,
    Panic = 9,
}

/// Opaque coefficient handle.
pub struct Degen1dCoefficient {
    inner: Coefficient,
}

/// Opaque classification-report handle.
pub struct Degen1dReport {
    inner: degen1d::ClassificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> Degen1dStatus {
    match err {
        Error::Domain { .. } | Error::DerivativeJump { .. } => Degen1dStatus::DomainError,
        Error::Indeterminate(_) => Degen1dStatus::Indeterminate,
        Error::NothingToCompare => Degen1dStatus::NothingToCompare,
        Error::Parse { .. } | Error::MissingParameter { .. } => Degen1dStatus::ParseError,
        Error::Io(_) => Degen1dStatus::IoError,
        Error::InvalidCoefficient(_) | Error::Invalid(_) | Error::IncompatibleBc(_) => {
            Degen1dStatus::InvalidArgument
        }
        _ => Degen1dStatus::NumericalFailure,
    }
}

fn guard<F: FnOnce() -> Degen1dStatus>(f: F) -> Degen1dStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            Degen1dStatus::Panic
        }
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (length query).
#[no_mangle]
pub unsafe extern "C" fn degen1d_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            // always terminate
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn degen1d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Free a string allocated by this library.
///
/// # Safety
/// `s` must have been returned by a degen1d function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn degen1d_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn domain_from(kind: i32, a: f64, b: f64) -> Result<DomainKind, Degen1dStatus> {
    match kind {
        0 => Ok(DomainKind::Line),
        1 => Ok(DomainKind::HalfLine(Side::Right)),
        2 => Ok(DomainKind::HalfLine(Side::Left)),
        3 => Ok(DomainKind::Interval(a, b)),
        _ => {
            set_error(
                "domain kind must be 0 (line), 1 (half-line), 2 (left half-line) or 3 (interval)",
            );
            Err(Degen1dStatus::InvalidArgument)
        }
    }
}

fn side_from(side: i32) -> Result<Side, Degen1dStatus> {
    match side {
        0 => Ok(Side::Left),
        1 => Ok(Side::Right),
        _ => {
            set_error("side must be 0 (left) or 1 (right)");
            Err(Degen1dStatus::InvalidArgument)
        }
    }
}

/// Build a power-law coefficient c(x) = amp |x|^exp per side on the domain
/// selected by `domain_kind` (interval bounds in `a`, `b`; ignored otherwise).
///
/// # Safety
/// `out` must be a valid pointer; the result is freed with
/// `degen1d_coefficient_free`.
#[no_mangle]
pub unsafe extern "C" fn degen1d_coefficient_power_law(
    amplitude_left: f64,
    exponent_left: f64,
    amplitude_right: f64,
    exponent_right: f64,
    domain_kind: i32,
    a: f64,
    b: f64,
    out: *mut *mut Degen1dCoefficient,
) -> Degen1dStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return Degen1dStatus::NullPointer;
        }
        let domain = match domain_from(domain_kind, a, b) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match Coefficient::power_law(
            amplitude_left,
            exponent_left,
            amplitude_right,
            exponent_right,
            domain,
        ) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(Degen1dCoefficient { inner: c }));
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Build a tabulated coefficient from parallel arrays of length `len`
/// (strictly increasing xs, non-negative values, monotone-cubic interpolated).
///
/// # Safety
/// `xs` and `cs` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn degen1d_coefficient_tabulated(
    xs: *const f64,
    cs: *const f64,
    len: usize,
    domain_kind: i32,
    a: f64,
    b: f64,
    out: *mut *mut Degen1dCoefficient,
) -> Degen1dStatus {
    guard(|| {
        if out.is_null() || xs.is_null() || cs.is_null() {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        }
        let domain = match domain_from(domain_kind, a, b) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let xs = std::slice::from_raw_parts(xs, len).to_vec();
        let cs = std::slice::from_raw_parts(cs, len).to_vec();
        match Coefficient::tabulated(xs, cs, domain) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(Degen1dCoefficient { inner: c }));
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `c` must be a live handle from a constructor, or null.
#[no_mangle]
pub unsafe extern "C" fn degen1d_coefficient_free(c: *mut Degen1dCoefficient) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Evaluate c(x).
///
/// # Safety
/// `c` must be a live coefficient handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_coefficient_eval(
    c: *const Degen1dCoefficient,
    x: f64,
    out: *mut f64,
) -> Degen1dStatus {
    guard(|| {
        let (Some(c), false) = ((c.as_ref()), out.is_null()) else {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        };
        match c.inner.eval(x) {
            Ok(v) => {
                *out = v;
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// The harmonic integral nu(x) = int_x^1 ds / c on the chosen side.
///
/// # Safety
/// `c` must be a live coefficient handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_nu(
    c: *const Degen1dCoefficient,
    side: i32,
    x: f64,
    out: *mut f64,
) -> Degen1dStatus {
    guard(|| {
        let (Some(c), false) = ((c.as_ref()), out.is_null()) else {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        };
        let side = match side_from(side) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Classifier::default().nu(&c.inner, side, x) {
            Ok(v) => {
                *out = v;
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// The growth integral mu(x) = int_1^x s ds / c(s) on the chosen side.
///
/// # Safety
/// `c` must be a live coefficient handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_mu(
    c: *const Degen1dCoefficient,
    side: i32,
    x: f64,
    out: *mut f64,
) -> Degen1dStatus {
    guard(|| {
        let (Some(c), false) = ((c.as_ref()), out.is_null()) else {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        };
        let side = match side_from(side) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match Classifier::default().mu(&c.inner, side, x) {
            Ok(v) => {
                *out = v;
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Classify the coefficient; the report is freed with `degen1d_report_free`.
///
/// # Safety
/// `c` must be a live coefficient handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_classify(
    c: *const Degen1dCoefficient,
    out: *mut *mut Degen1dReport,
) -> Degen1dStatus {
    guard(|| {
        let (Some(c), false) = ((c.as_ref()), out.is_null()) else {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        };
        match Classifier::default().classify(&c.inner) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(Degen1dReport { inner: r }));
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `r` must be a live report handle, or null.
#[no_mangle]
pub unsafe extern "C" fn degen1d_report_free(r: *mut Degen1dReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Trichotomy case of a report: 1, 2 or 3; 0 for a null handle.
///
/// # Safety
/// `r` must be a live report handle, or null.
#[no_mangle]
pub unsafe extern "C" fn degen1d_report_case(r: *const Degen1dReport) -> i32 {
    match r.as_ref() {
        Some(r) => match r.inner.case {
            TrichotomyCase::I => 1,
            TrichotomyCase::II => 2,
            TrichotomyCase::III => 3,
        },
        None => 0,
    }
}

/// Common deficiency index n+ = n- of the report; -1 for a null handle.
///
/// # Safety
/// `r` must be a live report handle, or null.
#[no_mangle]
pub unsafe extern "C" fn degen1d_report_deficiency_index(r: *const Degen1dReport) -> i32 {
    match r.as_ref() {
        Some(r) => r.inner.deficiency_indices.0 as i32,
        None => -1,
    }
}

/// 1 when the coefficient admits a unique submarkovian extension, 0 when a
/// one-parameter submarkovian subfamily exists; -1 for a null handle.
///
/// # Safety
/// `r` must be a live report handle, or null.
#[no_mangle]
pub unsafe extern "C" fn degen1d_report_unique_submarkovian(r: *const Degen1dReport) -> i32 {
    match r.as_ref() {
        Some(r) => r.inner.unique_submarkovian as i32,
        None => -1,
    }
}

/// Full classification report as JSON; free with `degen1d_string_free`.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_report_to_json(
    r: *const Degen1dReport,
    out: *mut *mut c_char,
) -> Degen1dStatus {
    guard(|| {
        let (Some(r), false) = ((r.as_ref()), out.is_null()) else {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        };
        match serde_json_string(&r.inner) {
            Some(s) => {
                *out = s.into_raw();
                Degen1dStatus::Ok
            }
            None => {
                set_error("serialization failed");
                Degen1dStatus::NumericalFailure
            }
        }
    })
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> Option<CString> {
    let json = serde_json::to_string_pretty(value).ok()?;
    CString::new(json).ok()
}

/// Deficiency index of the half-line operator on one side by shooting.
///
/// # Safety
/// `c` must be a live coefficient handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_deficiency_index(
    c: *const Degen1dCoefficient,
    side: i32,
    gamma: f64,
    out: *mut i32,
) -> Degen1dStatus {
    guard(|| {
        let (Some(c), false) = ((c.as_ref()), out.is_null()) else {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        };
        let side = match side_from(side) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match shoot::deficiency_index(&c.inner, side, gamma) {
            Ok(d) => {
                *out = d.index as i32;
                Degen1dStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Run a scenario file and return the report JSON (and optionally write all
/// artifacts into `out_dir`, which may be null). The JSON is freed with
/// `degen1d_string_free`.
///
/// # Safety
/// `path` (and `out_dir` when non-null) must be NUL-terminated strings;
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn degen1d_run_scenario(
    path: *const c_char,
    out_dir: *const c_char,
    out_json: *mut *mut c_char,
) -> Degen1dStatus {
    guard(|| {
        if path.is_null() || out_json.is_null() {
            set_error("null pointer argument");
            return Degen1dStatus::NullPointer;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => PathBuf::from(s),
            Err(_) => {
                set_error("path is not valid UTF-8");
                return Degen1dStatus::InvalidArgument;
            }
        };
        let scenario = match Scenario::from_file(&path) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let (report, artifacts) = run_scenario(&scenario, &Tolerances::default());
        if !out_dir.is_null() {
            if let Ok(dir) = CStr::from_ptr(out_dir).to_str() {
                let dir = PathBuf::from(dir);
                if let Err(e) = std::fs::create_dir_all(&dir) {
                    set_error(&e.to_string());
                    return Degen1dStatus::IoError;
                }
                for a in &artifacts {
                    if let Err(e) = std::fs::write(dir.join(&a.name), &a.bytes) {
                        set_error(&e.to_string());
                        return Degen1dStatus::IoError;
                    }
                }
            }
        }
        match CString::new(report.to_json()) {
            Ok(s) => {
                *out_json = s.into_raw();
                Degen1dStatus::Ok
            }
            Err(_) => {
                set_error("report contains interior NUL");
                Degen1dStatus::NumericalFailure
            }
        }
    })
}
