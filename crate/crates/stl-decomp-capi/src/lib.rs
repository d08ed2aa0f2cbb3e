//! C bindings for the task decomposition library.
//!
//! Handles are opaque pointers owned by the library; every `*_free`
//! function accepts null. Functions returning pointers yield null on
//! failure and functions returning `int32_t` yield a negative `STLDEC_ERR_*`
//! code; in both cases [`stldec_last_error`] describes the failure. The
//! error message is thread-local and stays valid until the next failing
//! call on the same thread.
//!
//! The generated header lives at `include/stl_decomp.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stl_decomp::decompose::{decompose, DecomposeError, DecompositionResult};
use stl_decomp::report::Report;
use stl_decomp::scenario::CompiledScenario;
use stl_decomp::solver::SolveStatus;
use stl_decomp::stl::{robustness, Trajectory};
use stl_decomp::Scenario;

/// The call succeeded.
pub const STLDEC_OK: i32 = 0;
/// A required pointer argument was null.
pub const STLDEC_ERR_NULL_ARGUMENT: i32 = -1;
/// A string argument was not valid UTF-8.
pub const STLDEC_ERR_UTF8: i32 = -2;
/// A scenario, params, or trajectory document failed to parse or validate.
pub const STLDEC_ERR_PARSE: i32 = -3;
/// The tasks are provably unsatisfiable before solving (fixed-region
/// conflict).
pub const STLDEC_ERR_UNSATISFIABLE: i32 = -4;
/// Decomposition failed or produced no single-edge tasks to evaluate.
pub const STLDEC_ERR_SOLVE: i32 = -5;
/// Robustness evaluation failed (for example, the trajectory ends before a
/// task horizon).
pub const STLDEC_ERR_MONITOR: i32 = -6;
/// A panic was caught at the boundary; state may be inconsistent.
pub const STLDEC_ERR_INTERNAL: i32 = -7;

/// Solver reached the duality-gap target.
pub const STLDEC_STATUS_OPTIMAL: i32 = 0;
/// Strictly feasible point found, gap target not reached.
pub const STLDEC_STATUS_FEASIBLE: i32 = 1;
/// Certified infeasible.
pub const STLDEC_STATUS_INFEASIBLE: i32 = 2;
/// Iteration budget exhausted without a verdict.
pub const STLDEC_STATUS_ITER_LIMIT: i32 = 3;

/// Evaluate the scenario's original tasks.
pub const STLDEC_TASKS_ORIGINAL: i32 = 0;
/// Evaluate the single-edge tasks produced by decomposition.
pub const STLDEC_TASKS_REWRITTEN: i32 = 1;

/// Parsed and validated scenario.
#[repr(C)]
pub struct StldecScenario {
    _private: [u8; 0],
}

/// Outcome of one decomposition solve.
#[repr(C)]
pub struct StldecResult {
    _private: [u8; 0],
}

struct ScenarioInner {
    compiled: CompiledScenario,
}

struct ResultInner {
    result: DecompositionResult,
    report: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl AsRef<str>) {
    let sanitized = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("interior nuls removed");
    });
}

fn guard<T>(fallback: T, f: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(value) => value,
        Err(_) => {
            set_error("internal panic at the library boundary");
            fallback
        }
    }
}

/// # Safety
/// `text` must be null or point to a nul-terminated string.
unsafe fn utf8_arg<'a>(text: *const c_char) -> Result<&'a str, i32> {
    if text.is_null() {
        set_error("null string argument");
        return Err(STLDEC_ERR_NULL_ARGUMENT);
    }
    unsafe { CStr::from_ptr(text) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        STLDEC_ERR_UTF8
    })
}

fn scenario_ref<'a>(scenario: *const StldecScenario) -> Option<&'a ScenarioInner> {
    if scenario.is_null() {
        set_error("null scenario handle");
        return None;
    }
    Some(unsafe { &*(scenario as *const ScenarioInner) })
}

fn result_ref<'a>(result: *const StldecResult) -> Option<&'a ResultInner> {
    if result.is_null() {
        set_error("null result handle");
        return None;
    }
    Some(unsafe { &*(result as *const ResultInner) })
}

fn export_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior nuls removed")
        .into_raw()
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn stldec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, empty when
/// no failure has occurred. Owned by the library; do not free.
#[no_mangle]
pub extern "C" fn stldec_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse and validate a scenario document. Returns null on failure.
///
/// # Safety
/// `text` must be null or point to a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn stldec_scenario_parse(text: *const c_char) -> *mut StldecScenario {
    guard(ptr::null_mut(), || {
        let text = match unsafe { utf8_arg(text) } {
            Ok(text) => text,
            Err(_) => return ptr::null_mut(),
        };
        let compiled = Scenario::parse(text).and_then(|s| s.compile());
        match compiled {
            Ok(compiled) => {
                Box::into_raw(Box::new(ScenarioInner { compiled })) as *mut StldecScenario
            }
            Err(err) => {
                set_error(err.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// Release a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a pointer returned by
/// [`stldec_scenario_parse`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn stldec_scenario_free(scenario: *mut StldecScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario as *mut ScenarioInner) });
    }
}

/// Number of agents, or a negative error code.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_scenario_agents(scenario: *const StldecScenario) -> i32 {
    guard(STLDEC_ERR_INTERNAL, || match scenario_ref(scenario) {
        Some(inner) => inner.compiled.spec.agents as i32,
        None => STLDEC_ERR_NULL_ARGUMENT,
    })
}

/// State dimension per agent, or a negative error code.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_scenario_state_dim(scenario: *const StldecScenario) -> i32 {
    guard(STLDEC_ERR_INTERNAL, || match scenario_ref(scenario) {
        Some(inner) => inner.compiled.spec.dim as i32,
        None => STLDEC_ERR_NULL_ARGUMENT,
    })
}

/// Decompose the scenario's tasks into single-edge rectangles.
///
/// Infeasibility is not an error: the returned handle reports it through
/// [`stldec_result_status`]. Null is returned only when the inputs are
/// unusable or the tasks are provably unsatisfiable before solving.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_decompose(scenario: *const StldecScenario) -> *mut StldecResult {
    guard(ptr::null_mut(), || {
        let Some(inner) = scenario_ref(scenario) else {
            return ptr::null_mut();
        };
        let compiled = &inner.compiled;
        match decompose(&compiled.spec, &compiled.comm, &compiled.options) {
            Ok(result) => {
                let report = Report::new(&result, &compiled.options);
                Box::into_raw(Box::new(ResultInner { result, report })) as *mut StldecResult
            }
            Err(err) => {
                set_error(err.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// Release a result handle. Null is ignored.
///
/// # Safety
/// `result` must be null or a pointer returned by [`stldec_decompose`]
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_free(result: *mut StldecResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result as *mut ResultInner) });
    }
}

/// One of the `STLDEC_STATUS_*` values, or a negative error code.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_status(result: *const StldecResult) -> i32 {
    guard(STLDEC_ERR_INTERNAL, || match result_ref(result) {
        Some(inner) => match inner.result.status {
            SolveStatus::Optimal => STLDEC_STATUS_OPTIMAL,
            SolveStatus::Feasible => STLDEC_STATUS_FEASIBLE,
            SolveStatus::Infeasible => STLDEC_STATUS_INFEASIBLE,
            SolveStatus::IterLimit => STLDEC_STATUS_ITER_LIMIT,
        },
        None => STLDEC_ERR_NULL_ARGUMENT,
    })
}

/// Volume objective at the final iterate; NaN on a null handle.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_objective(result: *const StldecResult) -> f64 {
    guard(f64::NAN, || match result_ref(result) {
        Some(inner) => inner.result.objective,
        None => f64::NAN,
    })
}

/// Smallest constraint margin in distance units; NaN on a null handle or
/// when the scenario produced no constraints.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_min_margin(result: *const StldecResult) -> f64 {
    guard(f64::NAN, || match result_ref(result) {
        Some(inner) if inner.result.min_margin.is_finite() => inner.result.min_margin,
        _ => f64::NAN,
    })
}

/// Number of decomposed multi-hop tasks, or a negative error code.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_task_count(result: *const StldecResult) -> i32 {
    guard(STLDEC_ERR_INTERNAL, || match result_ref(result) {
        Some(inner) => inner.result.tasks.len() as i32,
        None => STLDEC_ERR_NULL_ARGUMENT,
    })
}

/// Machine-readable JSON report. Free with [`stldec_string_free`].
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_report_json(result: *const StldecResult) -> *mut c_char {
    guard(ptr::null_mut(), || {
        let Some(inner) = result_ref(result) else {
            return ptr::null_mut();
        };
        match inner.report.to_machine_string() {
            Ok(text) => export_string(text),
            Err(err) => {
                set_error(err.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// Human-readable report table. Free with [`stldec_string_free`].
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn stldec_result_report_table(result: *const StldecResult) -> *mut c_char {
    guard(ptr::null_mut(), || match result_ref(result) {
        Some(inner) => export_string(inner.report.human_table()),
        None => ptr::null_mut(),
    })
}

/// Evaluate trajectory robustness against the original tasks
/// (`STLDEC_TASKS_ORIGINAL`) or against a fresh decomposition's
/// single-edge tasks (`STLDEC_TASKS_REWRITTEN`).
///
/// `trajectory_csv` uses the header `t,x1_1,...,x1_n,...,xN_n`. On success
/// writes the robustness value to `out_robustness` and returns
/// `STLDEC_OK`.
///
/// # Safety
/// `scenario` must be null or a live scenario handle; `trajectory_csv`
/// must be null or nul-terminated; `out_robustness` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn stldec_robustness(
    scenario: *const StldecScenario,
    trajectory_csv: *const c_char,
    which: i32,
    out_robustness: *mut f64,
) -> i32 {
    guard(STLDEC_ERR_INTERNAL, || {
        let Some(inner) = scenario_ref(scenario) else {
            return STLDEC_ERR_NULL_ARGUMENT;
        };
        if out_robustness.is_null() {
            set_error("null output pointer");
            return STLDEC_ERR_NULL_ARGUMENT;
        }
        let csv = match unsafe { utf8_arg(trajectory_csv) } {
            Ok(csv) => csv,
            Err(code) => return code,
        };
        let traj = match Trajectory::from_csv(csv) {
            Ok(traj) => traj,
            Err(err) => {
                set_error(err.to_string());
                return STLDEC_ERR_PARSE;
            }
        };
        let compiled = &inner.compiled;
        let rho = match which {
            STLDEC_TASKS_ORIGINAL => robustness(&compiled.spec, &traj, 0.0),
            STLDEC_TASKS_REWRITTEN => {
                let decomposed = match decompose(&compiled.spec, &compiled.comm, &compiled.options)
                {
                    Ok(result) => result,
                    Err(err) => {
                        let code = match err {
                            DecomposeError::Conflict(_) => STLDEC_ERR_UNSATISFIABLE,
                            _ => STLDEC_ERR_SOLVE,
                        };
                        set_error(err.to_string());
                        return code;
                    }
                };
                let Some(sub_spec) = decomposed.sub_spec else {
                    set_error("decomposition found no feasible rectangles");
                    return STLDEC_ERR_SOLVE;
                };
                robustness(&sub_spec, &traj, 0.0)
            }
            _ => {
                set_error(format!("unknown task set selector {which}"));
                return STLDEC_ERR_NULL_ARGUMENT;
            }
        };
        match rho {
            Ok(value) => {
                unsafe { *out_robustness = value };
                STLDEC_OK
            }
            Err(err) => {
                set_error(err.to_string());
                STLDEC_ERR_MONITOR
            }
        }
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string pointer returned by this library that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn stldec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
