//! C ABI over `flyq`.
//!
//! Every fallible call returns a [`FlyqStatus`]; on failure the message is
//! available from [`flyq_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flyq::config::TaskConfig;
use flyq::model::{ControlSchedule, TaskSpec};
use flyq::simulator::{simulate_task, SimulationReport, Thresholds};
use flyq::synthesis::Synthesizer;
use flyq::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlyqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidParameter = 4,
    PhaseMismatch = 5,
    NotRealizable = 6,
    Numerical = 7,
    Structural = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Which series of a schedule to copy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlyqSeries {
    Gamma = 0,
    Epsilon = 1,
}

/// A parsed task config.
pub struct FlyqTask {
    spec: TaskSpec,
    thresholds: Thresholds,
}

/// A synthesized control schedule.
pub struct FlyqSchedule(ControlSchedule);

/// The scored result of simulating a task.
pub struct FlyqReport {
    report: SimulationReport,
    thresholds: Thresholds,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FlyqStatus {
    match e {
        Error::Config(_) => FlyqStatus::Config,
        Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::WindowTooNarrow { .. } => {
            FlyqStatus::InvalidParameter
        }
        Error::PhaseMismatch(_) => FlyqStatus::PhaseMismatch,
        Error::NotRealizable(_) => FlyqStatus::NotRealizable,
        Error::NonFinite { .. } | Error::SectorIllConditioned { .. } | Error::InternalConsistency(_) => {
            FlyqStatus::Numerical
        }
        Error::Structural(_) => FlyqStatus::Structural,
        Error::Io(_) => FlyqStatus::Io,
    }
}

fn fail(status: FlyqStatus, msg: impl Into<String>) -> FlyqStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> FlyqStatus) -> FlyqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == FlyqStatus::Ok {
                set_error(String::new());
            }
            s
        }
        Err(_) => fail(FlyqStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: flyq::Result<T>) -> Result<T, FlyqStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(FlyqStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn flyq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a JSON task config. `n_points` overrides the grid size when non-zero.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flyq_task_from_json(json: *const c_char, n_points: usize, out: *mut *mut FlyqTask) -> FlyqStatus {
    guard(|| {
        non_null!(json, out);
        *out = ptr::null_mut();
        let text = attempt!(CStr::from_ptr(json).to_str().map_err(|e| fail(FlyqStatus::InvalidUtf8, e.to_string())));
        let cfg = attempt!(lift(TaskConfig::from_json(text)));
        let spec = attempt!(lift(cfg.task_spec((n_points > 0).then_some(n_points))));
        *out = Box::into_raw(Box::new(FlyqTask {
            spec,
            thresholds: cfg.thresholds,
        }));
        FlyqStatus::Ok
    })
}

/// # Safety
/// `task` must come from [`flyq_task_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn flyq_task_free(task: *mut FlyqTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

/// Grid size of a task.
///
/// # Safety
/// `task` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn flyq_task_len(task: *const FlyqTask) -> usize {
    task.as_ref().map_or(0, |t| t.spec.grid.len())
}

/// Synthesizes the control schedule of `task`.
///
/// # Safety
/// `task` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flyq_synthesize(task: *const FlyqTask, out: *mut *mut FlyqSchedule) -> FlyqStatus {
    guard(|| {
        non_null!(task, out);
        *out = ptr::null_mut();
        let s = attempt!(lift(Synthesizer::default().synthesize(&(*task).spec)));
        *out = Box::into_raw(Box::new(FlyqSchedule(s)));
        FlyqStatus::Ok
    })
}

/// # Safety
/// `schedule` must come from [`flyq_synthesize`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn flyq_schedule_free(schedule: *mut FlyqSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// # Safety
/// `schedule` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn flyq_schedule_len(schedule: *const FlyqSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.grid().len())
}

/// # Safety
/// `schedule` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn flyq_schedule_channels(schedule: *const FlyqSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.channels())
}

/// Copies the grid times (μs) into `buf`, which holds `len` values.
///
/// # Safety
/// `schedule` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn flyq_schedule_times(schedule: *const FlyqSchedule, buf: *mut f64, len: usize) -> FlyqStatus {
    guard(|| {
        non_null!(schedule, buf);
        copy_into(&(*schedule).0.grid().times(), buf, len)
    })
}

/// Copies one series of channel `channel` (0-based) into `buf`.
/// Rates are in rad/μs.
///
/// # Safety
/// `schedule` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn flyq_schedule_series(
    schedule: *const FlyqSchedule,
    channel: usize,
    series: FlyqSeries,
    buf: *mut f64,
    len: usize,
) -> FlyqStatus {
    guard(|| {
        non_null!(schedule, buf);
        let s = &(*schedule).0;
        if channel >= s.channels() {
            return fail(FlyqStatus::OutOfRange, format!("channel {channel} of {}", s.channels()));
        }
        let v = match series {
            FlyqSeries::Gamma => s.gamma(channel),
            FlyqSeries::Epsilon => s.epsilon(channel),
        };
        copy_into(v, buf, len)
    })
}

unsafe fn copy_into(v: &[f64], buf: *mut f64, len: usize) -> FlyqStatus {
    if len != v.len() {
        return fail(FlyqStatus::OutOfRange, format!("buffer holds {len} values, need {}", v.len()));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
    FlyqStatus::Ok
}

/// Synthesizes, simulates and scores `task`.
///
/// # Safety
/// `task` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flyq_simulate(task: *const FlyqTask, out: *mut *mut FlyqReport) -> FlyqStatus {
    guard(|| {
        non_null!(task, out);
        *out = ptr::null_mut();
        let t = &*task;
        let report = attempt!(lift(simulate_task(&t.spec)));
        *out = Box::into_raw(Box::new(FlyqReport {
            report,
            thresholds: t.thresholds,
        }));
        FlyqStatus::Ok
    })
}

/// # Safety
/// `report` must come from [`flyq_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn flyq_report_free(report: *mut FlyqReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Whether the scores meet the thresholds of the task config.
///
/// # Safety
/// `report` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flyq_report_passed(report: *const FlyqReport, passed: *mut bool) -> FlyqStatus {
    guard(|| {
        non_null!(report, passed);
        let r = &*report;
        *passed = r.report.passes(&r.thresholds);
        FlyqStatus::Ok
    })
}

/// Score `name` from the fidelity table, e.g. `"branch1"` or `"absorbed"`.
///
/// # Safety
/// `report` must be a live handle, `name` NUL-terminated and `value` valid.
#[no_mangle]
pub unsafe extern "C" fn flyq_report_fidelity(report: *const FlyqReport, name: *const c_char, value: *mut f64) -> FlyqStatus {
    guard(|| {
        non_null!(report, name, value);
        let key = attempt!(CStr::from_ptr(name).to_str().map_err(|e| fail(FlyqStatus::InvalidUtf8, e.to_string())));
        match (*report).report.fidelities.get(key) {
            Some(f) => {
                *value = *f;
                FlyqStatus::Ok
            }
            None => fail(FlyqStatus::OutOfRange, format!("no fidelity named {key:?}")),
        }
    })
}

/// The full report as JSON. Release the string with [`flyq_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flyq_report_json(report: *const FlyqReport, out: *mut *mut c_char) -> FlyqStatus {
    guard(|| {
        non_null!(report, out);
        *out = ptr::null_mut();
        let text = attempt!(serde_json::to_string(&(*report).report).map_err(|e| fail(FlyqStatus::Structural, e.to_string())));
        *out = CString::new(text).map_or(ptr::null_mut(), CString::into_raw);
        FlyqStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn flyq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
