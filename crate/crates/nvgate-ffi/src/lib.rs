//! C ABI over the nvgate scenarios.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free`. Every fallible call returns an
//! `NvgStatus`; the message of the last failure on the calling thread is
//! available from `nvg_last_error`. Panics never unwind into C.

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nvgate::design::{design_direct_gate, direct_infidelity, GateDesign};
use nvgate::experiments::{self, ScenarioConfig};
use nvgate::gates::flipflop_evolution;
use nvgate::results::ScanResult;
use nvgate::Error;

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NvgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    CalibrationFailure = 5,
    NoSolution = 6,
    NumericalFailure = 7,
    ConstructionFailure = 8,
    Internal = 9,
    Panic = 10,
}

/// Scenario selector for `nvg_run`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NvgScenario {
    Spectrum = 0,
    Calibrate = 1,
    Simulate = 2,
    ScanErrors = 3,
    ScanIntruder = 4,
    Compare = 5,
    DiagnoseErrors = 6,
}

/// Parsed and validated scenario file.
pub struct NvgConfig(ScenarioConfig);

/// Calibrated direct gate.
pub struct NvgDesign(GateDesign);

/// Scalar field over one or two axes.
pub struct NvgResult(ScanResult);

/// Calibrated quantities of a design. Times in us, couplings in rad/us.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NvgDesignInfo {
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub phi: f64,
    pub a1: f64,
    pub a2: f64,
    pub super_periods: u64,
    pub total_time: f64,
    pub sign1: i32,
    pub sign2: i32,
    pub ratio_residual: f64,
    pub magnitude_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NvgStatus {
    match e {
        Error::InvalidArgument(_) | Error::ContractViolation(_) => NvgStatus::InvalidArgument,
        Error::Config(_) => NvgStatus::Config,
        Error::CalibrationFailure { .. } => NvgStatus::CalibrationFailure,
        Error::NoSolution(_) => NvgStatus::NoSolution,
        Error::NumericalFailure(_) | Error::DegenerateFrame(_) => NvgStatus::NumericalFailure,
        Error::ConstructionFailure(_) => NvgStatus::ConstructionFailure,
        Error::ScheduleOverflow(_) => NvgStatus::Internal,
    }
}

struct Fail(NvgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NvgStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NvgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NvgStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {m}"));
            NvgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a NUL-terminated string alive for the call
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(NvgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    // SAFETY: out checked non-null by caller
    unsafe { *out = Box::into_raw(Box::new(v)) };
    Ok(())
}

unsafe fn owned_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(NvgStatus::Internal, "interior NUL".into()))?;
    // SAFETY: out checked non-null by caller
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nvg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated and
/// NUL-terminated when `cap > 0`). Returns the full message length without
/// the terminator, 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nvg_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            // SAFETY: n < cap and buf has cap bytes
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_config_parse(
    toml: *const c_char,
    out: *mut *mut NvgConfig,
) -> NvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = unsafe { str_arg(toml, "toml") }?;
        let cfg = ScenarioConfig::from_toml(text)?;
        unsafe { put(out, NvgConfig(cfg)) }
    })
}

/// Loads a scenario from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_config_load(
    path: *const c_char,
    out: *mut *mut NvgConfig,
) -> NvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = unsafe { str_arg(path, "path") }?;
        let cfg = ScenarioConfig::load(Path::new(p))?;
        unsafe { put(out, NvgConfig(cfg)) }
    })
}

/// # Safety
/// `cfg` must be null or a handle from `nvg_config_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nvg_config_free(cfg: *mut NvgConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Calibrates the direct gate described by the scenario.
///
/// # Safety
/// `cfg` must be a live config handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_design_new(
    cfg: *const NvgConfig,
    out: *mut *mut NvgDesign,
) -> NvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = unsafe { cfg.as_ref() }.ok_or_else(|| null("cfg"))?;
        let d = design_direct_gate(&cfg.0.design_request()?)?;
        unsafe { put(out, NvgDesign(d)) }
    })
}

/// # Safety
/// `d` must be a live design handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_design_info(
    d: *const NvgDesign,
    out: *mut NvgDesignInfo,
) -> NvgStatus {
    guard(|| {
        let d = &unsafe { d.as_ref() }.ok_or_else(|| null("design"))?.0;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let c = &d.calibration;
        *out = NvgDesignInfo {
            tau: d.spec.tau,
            tau1: c.tau1,
            tau2: c.tau2,
            phi: d.spec.phi,
            a1: c.a1,
            a2: c.a2,
            super_periods: d.super_periods,
            total_time: d.total_time,
            sign1: d.signs.0 as i32,
            sign2: d.signs.1 as i32,
            ratio_residual: c.ratio_residual,
            magnitude_residual: c.magnitude_residual,
        };
        Ok(())
    })
}

/// Process infidelity of the simulated gate against its target, with a
/// relative pulse detuning and a relative amplitude error.
///
/// # Safety
/// `d` must be a live design handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_design_infidelity(
    d: *const NvgDesign,
    detuning_rel: f64,
    amplitude_err: f64,
    out: *mut f64,
) -> NvgStatus {
    guard(|| {
        let d = &unsafe { d.as_ref() }.ok_or_else(|| null("design"))?.0;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = direct_infidelity(d, detuning_rel, amplitude_err)?;
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a live design handle.
#[no_mangle]
pub unsafe extern "C" fn nvg_design_free(d: *mut NvgDesign) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Runs one scenario.
///
/// # Safety
/// `cfg` must be a live config handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_run(
    cfg: *const NvgConfig,
    scenario: NvgScenario,
    out: *mut *mut NvgResult,
) -> NvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = &unsafe { cfg.as_ref() }.ok_or_else(|| null("cfg"))?.0;
        let r = match scenario {
            NvgScenario::Spectrum => experiments::run_spectrum(cfg)?,
            NvgScenario::Calibrate => experiments::run_calibrate_report(cfg)?,
            NvgScenario::Simulate => experiments::run_simulate(cfg)?,
            NvgScenario::ScanErrors => experiments::run_error_scan(cfg)?,
            NvgScenario::ScanIntruder => experiments::run_third_spin_scan(cfg)?,
            NvgScenario::Compare => experiments::run_comparison(cfg)?,
            NvgScenario::DiagnoseErrors => experiments::run_error_diagnostics(cfg)?,
        };
        unsafe { put(out, NvgResult(r)) }
    })
}

/// Number of axes (1 or 2) and their lengths; `len1` is 1 for a single axis.
///
/// # Safety
/// `r` must be a live result handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_result_shape(
    r: *const NvgResult,
    len0: *mut usize,
    len1: *mut usize,
) -> NvgStatus {
    guard(|| {
        let r = &unsafe { r.as_ref() }.ok_or_else(|| null("result"))?.0;
        let l0 = unsafe { len0.as_mut() }.ok_or_else(|| null("len0"))?;
        let l1 = unsafe { len1.as_mut() }.ok_or_else(|| null("len1"))?;
        *l0 = r.axes[0].values.len();
        *l1 = r.axes.get(1).map_or(1, |a| a.values.len());
        Ok(())
    })
}

/// Row-major field values, valid until the result is freed.
///
/// # Safety
/// `r` must be a live result handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_result_values(r: *const NvgResult, len: *mut usize) -> *const f64 {
    let (Some(r), Some(len)) = (unsafe { r.as_ref() }, unsafe { len.as_mut() }) else {
        set_error("result or len is null".into());
        return ptr::null();
    };
    *len = r.0.values.len();
    r.0.values.as_ptr()
}

/// Values of axis `axis`, valid until the result is freed; null if out of range.
///
/// # Safety
/// `r` must be a live result handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_result_axis(
    r: *const NvgResult,
    axis: usize,
    len: *mut usize,
) -> *const f64 {
    let (Some(r), Some(len)) = (unsafe { r.as_ref() }, unsafe { len.as_mut() }) else {
        set_error("result or len is null".into());
        return ptr::null();
    };
    match r.0.axes.get(axis) {
        Some(a) => {
            *len = a.values.len();
            a.values.as_ptr()
        }
        None => {
            set_error(format!("axis {axis} out of range"));
            *len = 0;
            ptr::null()
        }
    }
}

/// CSV rendering; free with `nvg_string_free`.
///
/// # Safety
/// `r` must be a live result handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_result_csv(r: *const NvgResult, out: *mut *mut c_char) -> NvgStatus {
    guard(|| {
        let r = &unsafe { r.as_ref() }.ok_or_else(|| null("result"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { owned_string(out, r.to_csv()) }
    })
}

/// JSON rendering with metadata; free with `nvg_string_free`.
///
/// # Safety
/// `r` must be a live result handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvg_result_json(r: *const NvgResult, out: *mut *mut c_char) -> NvgStatus {
    guard(|| {
        let r = &unsafe { r.as_ref() }.ok_or_else(|| null("result"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { owned_string(out, r.to_json()) }
    })
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn nvg_result_free(r: *mut NvgResult) {
    if !r.is_null() {
        drop(unsafe { Box::from_raw(r) });
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn nvg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Closed-form two-nucleus flip-flop evolution, 8x8 row-major, written as
/// interleaved (re, im) pairs into `out[128]`. Signs are +1 or -1.
///
/// # Safety
/// `out` must point to 128 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nvg_flipflop_evolution(
    a1: f64,
    a2: f64,
    s1: i32,
    s2: i32,
    t: f64,
    out: *mut f64,
) -> NvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sign = |s: i32| -> Result<i8, Fail> {
            match s {
                1 | -1 => Ok(s as i8),
                _ => Err(Fail(
                    NvgStatus::InvalidArgument,
                    format!("sign {s} is not +1 or -1"),
                )),
            }
        };
        let u = flipflop_evolution(a1, a2, sign(s1)?, sign(s2)?, t)?;
        // SAFETY: caller provides 128 doubles
        let buf = unsafe { std::slice::from_raw_parts_mut(out, 128) };
        for i in 0..8 {
            for j in 0..8 {
                let z = u[(i, j)];
                buf[2 * (8 * i + j)] = z.re;
                buf[2 * (8 * i + j) + 1] = z.im;
            }
        }
        Ok(())
    })
}
