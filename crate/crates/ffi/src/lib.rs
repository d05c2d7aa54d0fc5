//! C ABI for the symtop toolkit: run a task from a JSON configuration and
//! read back the JSON report through an opaque handle. All functions are
//! panic-safe and return error codes; string getters stay valid until the
//! owning handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use symtop::config::ExperimentConfig;
use symtop::runner::execute;

/// Status codes returned by every fallible entry point.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymtopStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    ExecutionError = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

/// Opaque result handle owning the report JSON and any CSV side files.
pub struct SymtopReport {
    report_json: CString,
    file_names: Vec<CString>,
    file_contents: Vec<CString>,
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn symtop_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Toolkit version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn symtop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Run the task described by a JSON experiment configuration. On success
/// writes a handle to `out_report` and returns `Ok`; on failure returns an
/// error code and leaves a message for `symtop_last_error_message`.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out_report` a
/// valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn symtop_run(
    config_json: *const c_char,
    out_report: *mut *mut SymtopReport,
) -> SymtopStatus {
    if config_json.is_null() || out_report.is_null() {
        set_last_error("null pointer argument");
        return SymtopStatus::NullPointer;
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_last_error("configuration is not valid UTF-8");
            return SymtopStatus::InvalidUtf8;
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<SymtopReport, (SymtopStatus, String)> {
        let config = ExperimentConfig::from_json(text)
            .map_err(|e| (SymtopStatus::ConfigError, e.to_string()))?;
        let artifacts =
            execute(&config).map_err(|e| (SymtopStatus::ExecutionError, e.to_string()))?;
        let to_c = |s: &str| CString::new(s.replace('\0', " ")).unwrap();
        Ok(SymtopReport {
            report_json: to_c(&artifacts.report.to_json()),
            file_names: artifacts.files.iter().map(|(n, _)| to_c(n)).collect(),
            file_contents: artifacts.files.iter().map(|(_, c)| to_c(c)).collect(),
        })
    }));
    match outcome {
        Ok(Ok(report)) => {
            *out_report = Box::into_raw(Box::new(report));
            SymtopStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SymtopStatus::Panic
        }
    }
}

/// JSON report owned by the handle; valid until `symtop_report_free`.
///
/// # Safety
/// `report` must be a live handle returned by `symtop_run`.
#[no_mangle]
pub unsafe extern "C" fn symtop_report_json(report: *const SymtopReport) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    (&*report).report_json.as_ptr()
}

/// Number of CSV side files produced by the run.
///
/// # Safety
/// `report` must be a live handle returned by `symtop_run`.
#[no_mangle]
pub unsafe extern "C" fn symtop_report_file_count(report: *const SymtopReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (&*report).file_names.len()
}

/// Name of side file `index`, or NULL if out of range.
///
/// # Safety
/// `report` must be a live handle returned by `symtop_run`.
#[no_mangle]
pub unsafe extern "C" fn symtop_report_file_name(
    report: *const SymtopReport,
    index: usize,
) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    let report = &*report;
    match report.file_names.get(index) {
        Some(name) => name.as_ptr(),
        None => ptr::null(),
    }
}

/// Contents of side file `index`, or NULL if out of range.
///
/// # Safety
/// `report` must be a live handle returned by `symtop_run`.
#[no_mangle]
pub unsafe extern "C" fn symtop_report_file_contents(
    report: *const SymtopReport,
    index: usize,
) -> *const c_char {
    if report.is_null() {
        return ptr::null();
    }
    let report = &*report;
    match report.file_contents.get(index) {
        Some(contents) => contents.as_ptr(),
        None => ptr::null(),
    }
}

/// Release a handle returned by `symtop_run`. Passing NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symtop_report_free(report: *mut SymtopReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
