//! C ABI over the `locmet` library.
//!
//! Handles are opaque and owned by the caller: every `lm_*_parse`,
//! `lm_*_read` or `lm_check*` that succeeds hands out a pointer that must be
//! released with the matching `lm_*_free`. Functions return an [`LmStatus`];
//! on failure a message is available from [`lm_last_error`] on the same
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use locmet::cli::{check_code, check_envelope, SpecFile};
use locmet::metrizability::{check_metrizability_with, CheckOptions, MetrizabilityReport, Verdict};
use locmet::volume_euler::euler_form;
use locmet::{Error, Tolerances};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Spec = 5,
    Domain = 6,
    InvalidChart = 7,
    Precondition = 8,
    Numerical = 9,
    NotCompatible = 10,
    OutOfRange = 11,
    NoMetric = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmVerdict {
    Metric = 0,
    Flat = 1,
    NotMetricEigen = 2,
    NotMetricSkew = 3,
    Inconclusive = 4,
}

impl From<Verdict> for LmVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Metric => LmVerdict::Metric,
            Verdict::Flat => LmVerdict::Flat,
            Verdict::NotMetricEigen => LmVerdict::NotMetricEigen,
            Verdict::NotMetricSkew => LmVerdict::NotMetricSkew,
            Verdict::Inconclusive => LmVerdict::Inconclusive,
        }
    }
}

/// A parsed connection spec.
pub struct LmSpec {
    inner: SpecFile,
}

/// Outcome of a metrizability check.
pub struct LmReport {
    report: MetrizabilityReport,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (LmStatus, String);

fn status_of(e: &Error) -> LmStatus {
    match e {
        Error::Parse(_) => LmStatus::Parse,
        Error::Spec(_) => LmStatus::Spec,
        Error::Domain(_) => LmStatus::Domain,
        Error::InvalidChart(_) | Error::InvalidPath(_) | Error::ChartMismatch => {
            LmStatus::InvalidChart
        }
        Error::NotCompatible { .. } => LmStatus::NotCompatible,
        Error::SingularFrame(_)
        | Error::NotFlat { .. }
        | Error::DegenerateVolume(_)
        | Error::EigenPreconditionFailed(_)
        | Error::NotSpd(_) => LmStatus::Numerical,
        Error::Precondition(m) if m.starts_with("cannot read") => LmStatus::Io,
        Error::Precondition(_) => LmStatus::Precondition,
    }
}

fn lib(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LmStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| (LmStatus::NullArgument, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| (LmStatus::NullArgument, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((LmStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (LmStatus::InvalidUtf8, format!("{name}: {e}")))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `lm_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, NUL-terminated, static.
#[no_mangle]
pub extern "C" fn lm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses spec-file text.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_spec_parse(
    source: *const c_char,
    out_spec: *mut *mut LmSpec,
) -> LmStatus {
    guard(|| {
        let slot = out(out_spec, "out_spec")?;
        *slot = ptr::null_mut();
        let inner = SpecFile::parse(text(source, "source")?).map_err(lib)?;
        *slot = Box::into_raw(Box::new(LmSpec { inner }));
        Ok(())
    })
}

/// Reads and parses a spec file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_spec_read(path: *const c_char, out_spec: *mut *mut LmSpec) -> LmStatus {
    guard(|| {
        let slot = out(out_spec, "out_spec")?;
        *slot = ptr::null_mut();
        let inner = SpecFile::read(Path::new(text(path, "path")?)).map_err(lib)?;
        *slot = Box::into_raw(Box::new(LmSpec { inner }));
        Ok(())
    })
}

/// Overrides the grid of the spec's chart.
///
/// # Safety
/// `spec` must come from `lm_spec_parse` or `lm_spec_read`.
#[no_mangle]
pub unsafe extern "C" fn lm_spec_set_grid(spec: *mut LmSpec, nx: usize, ny: usize) -> LmStatus {
    guard(|| {
        let s = out(spec, "spec")?;
        s.inner.chart = s.inner.chart.with_grid(nx, ny).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or come from `lm_spec_parse` / `lm_spec_read`, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lm_spec_free(spec: *mut LmSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

unsafe fn check(
    spec: *const LmSpec,
    tol_scale: f64,
    basepoint: Option<(f64, f64)>,
    out_report: *mut *mut LmReport,
) -> LmStatus {
    guard(|| {
        let slot = out(out_report, "out_report")?;
        *slot = ptr::null_mut();
        let s = &arg(spec, "spec")?.inner;
        if !(tol_scale.is_finite() && tol_scale > 0.0) {
            return Err((
                LmStatus::Precondition,
                format!("tolerance scale must be positive, got {tol_scale}"),
            ));
        }
        let theta = s.connection().ok_or((
            LmStatus::Precondition,
            "spec has no [connection] section".to_string(),
        ))?;
        let opts = CheckOptions {
            tolerances: Tolerances::default().scaled(tol_scale),
            basepoint,
            ..CheckOptions::default()
        };
        let report = check_metrizability_with(&theta, &opts).map_err(lib)?;
        let json = check_envelope(s, &report).map_err(lib)?.to_json();
        let json = CString::new(json).map_err(|e| (LmStatus::Panic, e.to_string()))?;
        *slot = Box::into_raw(Box::new(LmReport { report, json }));
        Ok(())
    })
}

/// Runs the metrizability check with every tolerance scaled by `tol_scale`
/// (1 for the defaults) and the lower-left basepoint.
///
/// # Safety
/// `spec` must be a live spec handle and `out_report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_check(
    spec: *const LmSpec,
    tol_scale: f64,
    out_report: *mut *mut LmReport,
) -> LmStatus {
    check(spec, tol_scale, None, out_report)
}

/// Like [`lm_check`] with the basepoint snapped to the node nearest `(x, y)`.
///
/// # Safety
/// As for [`lm_check`].
#[no_mangle]
pub unsafe extern "C" fn lm_check_at(
    spec: *const LmSpec,
    tol_scale: f64,
    x: f64,
    y: f64,
    out_report: *mut *mut LmReport,
) -> LmStatus {
    check(spec, tol_scale, Some((x, y)), out_report)
}

/// # Safety
/// `report` must be null or come from `lm_check*`, and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn lm_report_free(report: *mut LmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live report handle; `out_verdict` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_report_verdict(
    report: *const LmReport,
    out_verdict: *mut LmVerdict,
) -> LmStatus {
    guard(|| {
        *out(out_verdict, "out_verdict")? = arg(report, "report")?.report.verdict.into();
        Ok(())
    })
}

/// Exit code the CLI would return for this report.
///
/// # Safety
/// `report` must be a live report handle; `out_code` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_report_exit_code(
    report: *const LmReport,
    out_code: *mut i32,
) -> LmStatus {
    guard(|| {
        *out(out_code, "out_code")? = check_code(&arg(report, "report")?.report);
        Ok(())
    })
}

/// Witness point of a negative or inconclusive verdict. `*has_witness` is
/// false when the report has none; `x` and `y` are then left untouched.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lm_report_witness(
    report: *const LmReport,
    has_witness: *mut bool,
    x: *mut f64,
    y: *mut f64,
) -> LmStatus {
    guard(|| {
        let r = &arg(report, "report")?.report;
        let (has, x, y) = (out(has_witness, "has_witness")?, out(x, "x")?, out(y, "y")?);
        *has = r.witness.is_some();
        if let Some(p) = r.witness {
            (*x, *y) = (p.x, p.y);
        }
        Ok(())
    })
}

/// Grid size of the chart the report was computed on.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lm_report_grid(
    report: *const LmReport,
    nx: *mut usize,
    ny: *mut usize,
) -> LmStatus {
    guard(|| {
        let (gx, gy) = arg(report, "report")?.report.chart.grid();
        (*out(nx, "nx")?, *out(ny, "ny")?) = (gx, gy);
        Ok(())
    })
}

/// Recovered metric at node `(ix, iy)`, row-major into `out4[0..4]`.
/// Returns `NoMetric` for verdicts without a metric.
///
/// # Safety
/// `report` must be a live report handle and `out4` point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn lm_report_metric_at(
    report: *const LmReport,
    ix: usize,
    iy: usize,
    out4: *mut f64,
) -> LmStatus {
    guard(|| {
        let r = &arg(report, "report")?.report;
        if out4.is_null() {
            return Err((LmStatus::NullArgument, "out4 is null".into()));
        }
        let m = r.metric.as_ref().ok_or((
            LmStatus::NoMetric,
            format!("verdict {} carries no metric", r.verdict),
        ))?;
        let (nx, ny) = r.chart.grid();
        if ix >= nx || iy >= ny {
            return Err((
                LmStatus::OutOfRange,
                format!("node ({ix}, {iy}) outside {nx}×{ny} grid"),
            ));
        }
        let g = m.at(ix, iy).map_err(lib)?;
        let dst = std::slice::from_raw_parts_mut(out4, 4);
        dst.copy_from_slice(&[g.0[0][0], g.0[0][1], g.0[1][0], g.0[1][1]]);
        Ok(())
    })
}

/// JSON envelope identical to `locmet check --json`. Owned by the report.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lm_report_json(report: *const LmReport) -> *const c_char {
    match report.as_ref() {
        Some(r) => r.json.as_ptr(),
        None => {
            set_error("report is null");
            ptr::null()
        }
    }
}

/// Euler number of `[connection]` with respect to `[metric]`.
///
/// # Safety
/// `spec` must be a live spec handle and `out_number` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_euler_number(
    spec: *const LmSpec,
    tol_scale: f64,
    out_number: *mut f64,
) -> LmStatus {
    guard(|| {
        let dst = out(out_number, "out_number")?;
        let s = &arg(spec, "spec")?.inner;
        if !(tol_scale.is_finite() && tol_scale > 0.0) {
            return Err((
                LmStatus::Precondition,
                format!("tolerance scale must be positive, got {tol_scale}"),
            ));
        }
        let missing = |what: &str| {
            (
                LmStatus::Precondition,
                format!("spec has no {what} section"),
            )
        };
        let theta = s.connection().ok_or_else(|| missing("[connection]"))?;
        let g = s.metric_field().ok_or_else(|| missing("[metric]"))?;
        *dst = euler_form(&theta, &g, &Tolerances::default().scaled(tol_scale))
            .map_err(lib)?
            .euler_number;
        Ok(())
    })
}
