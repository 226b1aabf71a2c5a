//! C interface.
//!
//! Bundles are opaque handles created by `paraf_bundle_from_*` and released
//! with `paraf_bundle_free`. Every fallible call returns a `ParafStatus`;
//! on failure `paraf_last_error` describes the problem for the calling
//! thread. Strings handed out by the library are freed with
//! `paraf_string_free`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use paraf_core::bundle_file::{parse_bundle, write_bundle};
use paraf_core::catalog;
use paraf_core::check::Tolerances;
use paraf_core::classify::{sectional_curvature, Analysis};
use paraf_core::report::{parse_assignment, parse_checks, run_bundle, Format, RunConfig, Source};
use paraf_core::structure::StructureBundle;
use paraf_core::{Error, Point};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParafStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    UnknownKey = 3,
    Config = 4,
    Parse = 5,
    Construction = 6,
    AxiomsFailed = 7,
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque structure bundle.
pub struct ParafBundle {
    inner: StructureBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ParafStatus {
    match e {
        Error::UnknownKey { .. } => ParafStatus::UnknownKey,
        Error::Config(_) => ParafStatus::Config,
        Error::Parse { .. } => ParafStatus::Parse,
        Error::AxiomsFailed(_) => ParafStatus::AxiomsFailed,
        Error::Io(_) => ParafStatus::Io,
        Error::Rank(_) | Error::Construction(_) | Error::DimensionMismatch(_) | Error::Contract(_) => {
            ParafStatus::Construction
        }
        Error::Domain(_) | Error::DerivativeDomain(_) | Error::Nondegeneracy(_) | Error::PlaneDegeneracy(_) => {
            ParafStatus::Numerical
        }
    }
}

enum Fail {
    Null(&'static str),
    Utf8(&'static str),
    Engine(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Engine(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ParafStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ParafStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null argument: {what}"));
            ParafStatus::NullArgument
        }
        Ok(Err(Fail::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            ParafStatus::InvalidUtf8
        }
        Ok(Err(Fail::Engine(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            ParafStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &'static str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a>(b: *const ParafBundle) -> Result<&'a StructureBundle, Fail> {
    b.as_ref().map(|b| &b.inner).ok_or(Fail::Null("bundle"))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::Engine(Error::Contract("string contains NUL".into())))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn give_bundle(b: StructureBundle, out: *mut *mut ParafBundle) {
    unsafe { *out = Box::into_raw(Box::new(ParafBundle { inner: b })) };
}

/// Build a catalog entry. `params` is `NULL` or a comma-separated list of
/// `name=value` pairs.
///
/// # Safety
/// `key` and `params` are NUL-terminated strings or `NULL`; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn paraf_bundle_from_catalog(
    key: *const c_char,
    params: *const c_char,
    out: *mut *mut ParafBundle,
) -> ParafStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let key = text(key, "key")?;
        let mut map = BTreeMap::new();
        if let Some(p) = optional_text(params, "params")? {
            for item in p.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = parse_assignment(item)?;
                map.insert(k, v);
            }
        }
        give_bundle(catalog::resolve(key, &map)?, out);
        Ok(())
    })
}

/// Parse a bundle description.
///
/// # Safety
/// `source` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn paraf_bundle_from_text(source: *const c_char, out: *mut *mut ParafBundle) -> ParafStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        give_bundle(parse_bundle(text(source, "source")?)?, out);
        Ok(())
    })
}

/// # Safety
/// `bundle` comes from `paraf_bundle_from_*` and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn paraf_bundle_free(bundle: *mut ParafBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Manifold dimension, 0 for a null handle.
///
/// # Safety
/// `bundle` is a live handle or `NULL`.
#[no_mangle]
pub unsafe extern "C" fn paraf_bundle_dim(bundle: *const ParafBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.inner.dim())
}

/// Number of characteristic fields, 0 for a null handle.
///
/// # Safety
/// `bundle` is a live handle or `NULL`.
#[no_mangle]
pub unsafe extern "C" fn paraf_bundle_p(bundle: *const ParafBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.inner.p())
}

/// The bundle in description-file form.
///
/// # Safety
/// `bundle` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn paraf_bundle_describe(bundle: *const ParafBundle, out: *mut *mut c_char) -> ParafStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        give_string(write_bundle(handle(bundle)?), out)
    })
}

/// Most specific class name, e.g. `weak_para_C`. Fails with
/// `AXIOMS_FAILED` if the bundle violates an axiom at some sample.
///
/// # Safety
/// `bundle` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn paraf_classify(
    bundle: *const ParafBundle,
    samples: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> ParafStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let b = handle(bundle)?.clone().with_sampling(samples, seed)?;
        let tol = Tolerances::for_strategy(b.strategy());
        let v = Analysis::new(&b, tol)?.classify()?;
        give_string(v.class_id.to_string(), out)
    })
}

/// Run check suites and return the JSON report. `checks` is `NULL` for all
/// suites or a comma-separated list. `exit_code` receives 0 when every
/// non-vacuous check passes and 1 otherwise.
///
/// # Safety
/// `bundle` is a live handle; `checks` is `NULL` or a NUL-terminated string;
/// `out` and `exit_code` are writable.
#[no_mangle]
pub unsafe extern "C" fn paraf_report_json(
    bundle: *const ParafBundle,
    samples: usize,
    seed: u64,
    checks: *const c_char,
    out: *mut *mut c_char,
    exit_code: *mut c_int,
) -> ParafStatus {
    guard(|| {
        if out.is_null() || exit_code.is_null() {
            return Err(Fail::Null("out"));
        }
        let b = handle(bundle)?;
        let mut config = RunConfig::catalog("");
        config.structure = Source::Inline { dim: b.dim(), p: b.p() };
        config.samples = samples;
        config.seed = seed;
        config.format = Format::Json;
        if let Some(c) = optional_text(checks, "checks")? {
            config.checks = parse_checks(c)?;
        }
        let report = run_bundle(&config, b.clone())?;
        *exit_code = report.exit_code();
        give_string(report.to_json(), out)
    })
}

/// Sectional curvature of the plane spanned by `x` and `y` at `point`; all
/// three arrays have `len` = dimension entries.
///
/// # Safety
/// `bundle` is a live handle; the arrays hold `len` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn paraf_sectional_curvature(
    bundle: *const ParafBundle,
    x: *const f64,
    y: *const f64,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> ParafStatus {
    guard(|| {
        if x.is_null() || y.is_null() || point.is_null() || out.is_null() {
            return Err(Fail::Null("array"));
        }
        let b = handle(bundle)?;
        if len != b.dim() {
            return Err(Error::DimensionMismatch(format!("arrays of length {len} for dimension {}", b.dim())).into());
        }
        let (x, y) = (std::slice::from_raw_parts(x, len), std::slice::from_raw_parts(y, len));
        let pt = Point { coords: std::slice::from_raw_parts(point, len).to_vec() };
        *out = sectional_curvature(b, x, y, &pt)?;
        Ok(())
    })
}

/// # Safety
/// `s` comes from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn paraf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or `NULL`. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn paraf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Engine and catalog version, static storage.
#[no_mangle]
pub extern "C" fn paraf_version() -> *const c_char {
    static V: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    V.get_or_init(|| CString::new(paraf_core::report::version()).unwrap()).as_ptr()
}
