//! C ABI for the valued workflow satisfiability solver.
//!
//! Instances and solve reports travel as opaque handles; every fallible
//! call returns a [`VwspStatus`] and stores a human-readable message
//! retrievable with [`vwsp_last_error_message`]. Strings returned by the
//! library are NUL-terminated, UTF-8 and owned by the caller, who must
//! release them with [`vwsp_string_free`].
//!
//! The C header is generated into `include/vwsp.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::time::Duration;

use vwsp::solver::{solve, SolveConfig, SolveReport, Termination};
use vwsp::{generator, io, mip, oracle, GeneratorParams, WorkflowInstance};

/// Status of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VwspStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The instance text could not be parsed or validated.
    ParseError = 3,
    /// Generator or solver parameters were invalid.
    InvalidParams = 4,
    /// The operation does not support this instance (e.g. MIP export of
    /// table-form authorisations).
    Unsupported = 5,
    /// An exhaustive computation exceeded its size guard.
    TooLarge = 6,
    /// An output buffer was too small.
    BufferTooSmall = 7,
}

/// How a solve ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VwspTermination {
    Optimal = 0,
    BoundMet = 1,
    TimeLimit = 2,
}

/// Opaque instance handle.
pub struct VwspInstance(WorkflowInstance);

/// Opaque solve-report handle.
pub struct VwspReport(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl std::fmt::Display) {
    let owned = CString::new(message.to_string())
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn classify(err: &vwsp::Error) -> VwspStatus {
    match err {
        vwsp::Error::Parse(_) | vwsp::Error::Io(_) => VwspStatus::ParseError,
        vwsp::Error::Unsupported(_) => VwspStatus::Unsupported,
        vwsp::Error::TooLarge { .. } => VwspStatus::TooLarge,
        _ => VwspStatus::InvalidParams,
    }
}

fn to_c_string(text: String) -> *mut c_char {
    CString::new(text)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Message of the most recent failed call on this thread, or NULL when
/// the latest fallible call succeeded. Free with `vwsp_string_free`.
#[no_mangle]
pub extern "C" fn vwsp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|msg| msg.clone().into_raw())
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned by a `vwsp_*`
/// function, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vwsp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse an instance from its JSON text.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_from_json(
    json: *const c_char,
    out: *mut *mut VwspInstance,
) -> VwspStatus {
    clear_error();
    if json.is_null() || out.is_null() {
        set_error("NULL argument");
        return VwspStatus::NullArgument;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(text) => text,
        Err(_) => {
            set_error("instance text is not valid UTF-8");
            return VwspStatus::InvalidUtf8;
        }
    };
    match io::parse_instance(text) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(VwspInstance(instance)));
            VwspStatus::Ok
        }
        Err(err) => {
            set_error(&err);
            classify(&err)
        }
    }
}

/// Generate a benchmark instance (see the `generate` CLI subcommand).
///
/// # Safety
/// `out` must be a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_generate(
    k: u32,
    d: f64,
    alpha: f64,
    seed: u64,
    out: *mut *mut VwspInstance,
) -> VwspStatus {
    clear_error();
    if out.is_null() {
        set_error("NULL argument");
        return VwspStatus::NullArgument;
    }
    match generator::generate(GeneratorParams { k, d, alpha, seed }) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(VwspInstance(instance)));
            VwspStatus::Ok
        }
        Err(err) => {
            set_error(&err);
            VwspStatus::InvalidParams
        }
    }
}

/// Canonical JSON text of an instance. Free with `vwsp_string_free`.
///
/// # Safety
/// `instance` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_to_json(instance: *const VwspInstance) -> *mut c_char {
    if instance.is_null() {
        return std::ptr::null_mut();
    }
    to_c_string(io::instance_to_json(&(*instance).0))
}

/// # Safety
/// `instance` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_step_count(instance: *const VwspInstance) -> u32 {
    if instance.is_null() {
        return 0;
    }
    (*instance).0.step_count()
}

/// # Safety
/// `instance` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_user_count(instance: *const VwspInstance) -> u32 {
    if instance.is_null() {
        return 0;
    }
    (*instance).0.user_count()
}

/// # Safety
/// `instance` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_constraint_count(instance: *const VwspInstance) -> usize {
    if instance.is_null() {
        return 0;
    }
    (*instance).0.constraints().len()
}

/// Release an instance handle.
///
/// # Safety
/// `instance` must be NULL or a live handle from this library, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn vwsp_instance_free(instance: *mut VwspInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Solve an instance to optimality. `time_limit_ms` of zero means no
/// limit.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid destination for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn vwsp_solve(
    instance: *const VwspInstance,
    time_limit_ms: u64,
    out: *mut *mut VwspReport,
) -> VwspStatus {
    clear_error();
    if instance.is_null() || out.is_null() {
        set_error("NULL argument");
        return VwspStatus::NullArgument;
    }
    let config = SolveConfig {
        time_limit: (time_limit_ms > 0).then(|| Duration::from_millis(time_limit_ms)),
        ..Default::default()
    };
    match solve(&(*instance).0, &config) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(VwspReport(report)));
            VwspStatus::Ok
        }
        Err(err) => {
            set_error(&err);
            classify(&err)
        }
    }
}

/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_weight(report: *const VwspReport) -> i64 {
    if report.is_null() {
        return -1;
    }
    (*report).0.weight.0
}

/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_constraint_weight(report: *const VwspReport) -> i64 {
    if report.is_null() {
        return -1;
    }
    (*report).0.constraint_weight.0
}

/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_authorisation_weight(report: *const VwspReport) -> i64 {
    if report.is_null() {
        return -1;
    }
    (*report).0.authorisation_weight.0
}

/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_nodes(report: *const VwspReport) -> u64 {
    if report.is_null() {
        return 0;
    }
    (*report).0.nodes_expanded
}

/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_termination(report: *const VwspReport) -> VwspTermination {
    if report.is_null() {
        return VwspTermination::TimeLimit;
    }
    match (*report).0.termination {
        Termination::Optimal => VwspTermination::Optimal,
        Termination::BoundMet => VwspTermination::BoundMet,
        Termination::TimeLimit => VwspTermination::TimeLimit,
    }
}

/// Copy the plan into `buffer`: `buffer[s]` becomes the user index of step
/// `s`. `len` must be at least the step count.
///
/// # Safety
/// `report` must be a live handle and `buffer` must point to `len`
/// writable `uint32_t`s.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_plan(
    report: *const VwspReport,
    buffer: *mut u32,
    len: usize,
) -> VwspStatus {
    clear_error();
    if report.is_null() || buffer.is_null() {
        set_error("NULL argument");
        return VwspStatus::NullArgument;
    }
    let plan = &(*report).0.plan;
    let k = plan.step_count() as usize;
    if len < k {
        set_error(format!("plan buffer holds {} entries, need {}", len, k));
        return VwspStatus::BufferTooSmall;
    }
    for s in 0..k {
        let user = plan
            .get(vwsp::StepId(s as u32))
            .expect("solve reports carry complete plans");
        *buffer.add(s) = user.0;
    }
    VwspStatus::Ok
}

/// Release a report handle.
///
/// # Safety
/// `report` must be NULL or a live handle from this library, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn vwsp_report_free(report: *mut VwspReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Export the instance as an LP-format MIP model. Free the returned string
/// with `vwsp_string_free`.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid destination for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn vwsp_export_mip(
    instance: *const VwspInstance,
    out: *mut *mut c_char,
) -> VwspStatus {
    clear_error();
    if instance.is_null() || out.is_null() {
        set_error("NULL argument");
        return VwspStatus::NullArgument;
    }
    match mip::export_mip(&(*instance).0) {
        Ok(model) => {
            *out = to_c_string(model);
            VwspStatus::Ok
        }
        Err(err) => {
            set_error(&err);
            classify(&err)
        }
    }
}

/// Optimal weight by exhaustive pattern enumeration (guarded; only small
/// instances are accepted).
///
/// # Safety
/// `instance` must be a live handle and `weight_out` a valid destination
/// for one `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn vwsp_oracle_weight(
    instance: *const VwspInstance,
    weight_out: *mut i64,
) -> VwspStatus {
    clear_error();
    if instance.is_null() || weight_out.is_null() {
        set_error("NULL argument");
        return VwspStatus::NullArgument;
    }
    match oracle::oracle_by_patterns(&(*instance).0) {
        Ok(result) => {
            *weight_out = result.weight.0;
            VwspStatus::Ok
        }
        Err(err) => {
            set_error(&err);
            classify(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_solve_and_read_back() {
        unsafe {
            let mut instance: *mut VwspInstance = std::ptr::null_mut();
            assert_eq!(
                vwsp_instance_generate(10, 0.2, 1.0, 7, &mut instance),
                VwspStatus::Ok
            );
            assert_eq!(vwsp_instance_step_count(instance), 10);
            assert_eq!(vwsp_instance_user_count(instance), 110);

            let mut report: *mut VwspReport = std::ptr::null_mut();
            assert_eq!(vwsp_solve(instance, 0, &mut report), VwspStatus::Ok);
            let weight = vwsp_report_weight(report);
            assert!(weight >= 0);
            assert_eq!(
                vwsp_report_weight(report),
                vwsp_report_constraint_weight(report)
                    + vwsp_report_authorisation_weight(report)
            );

            let mut plan = vec![0u32; 10];
            assert_eq!(
                vwsp_report_plan(report, plan.as_mut_ptr(), plan.len()),
                VwspStatus::Ok
            );
            assert!(plan.iter().all(|&u| u < 110));

            let json = vwsp_instance_to_json(instance);
            assert!(!json.is_null());

            vwsp_string_free(json);
            vwsp_report_free(report);
            vwsp_instance_free(instance);
        }
    }

    #[test]
    fn parse_round_trip_through_the_abi() {
        unsafe {
            let mut original: *mut VwspInstance = std::ptr::null_mut();
            assert_eq!(
                vwsp_instance_generate(8, 0.3, 0.5, 3, &mut original),
                VwspStatus::Ok
            );
            let json = vwsp_instance_to_json(original);
            let mut parsed: *mut VwspInstance = std::ptr::null_mut();
            assert_eq!(
                vwsp_instance_from_json(json, &mut parsed),
                VwspStatus::Ok
            );
            let json_again = vwsp_instance_to_json(parsed);
            assert_eq!(CStr::from_ptr(json), CStr::from_ptr(json_again));
            vwsp_string_free(json);
            vwsp_string_free(json_again);
            vwsp_instance_free(original);
            vwsp_instance_free(parsed);
        }
    }

    #[test]
    fn errors_set_a_message() {
        unsafe {
            let mut out: *mut VwspInstance = std::ptr::null_mut();
            let text = CString::new("{ not json").unwrap();
            assert_eq!(
                vwsp_instance_from_json(text.as_ptr(), &mut out),
                VwspStatus::ParseError
            );
            let message = vwsp_last_error_message();
            assert!(!message.is_null());
            let rendered = CStr::from_ptr(message).to_string_lossy().into_owned();
            assert!(rendered.contains("parse"), "{}", rendered);
            vwsp_string_free(message);

            assert_eq!(
                vwsp_instance_generate(3, 0.1, 0.5, 0, &mut out),
                VwspStatus::InvalidParams
            );
        }
    }

    #[test]
    fn oracle_weight_matches_solver() {
        unsafe {
            let mut instance: *mut VwspInstance = std::ptr::null_mut();
            assert_eq!(
                vwsp_instance_generate(7, 0.4, 1.0, 11, &mut instance),
                VwspStatus::Ok
            );
            let mut report: *mut VwspReport = std::ptr::null_mut();
            assert_eq!(vwsp_solve(instance, 0, &mut report), VwspStatus::Ok);
            let mut oracle_weight = 0i64;
            assert_eq!(
                vwsp_oracle_weight(instance, &mut oracle_weight),
                VwspStatus::Ok
            );
            assert_eq!(oracle_weight, vwsp_report_weight(report));
            vwsp_report_free(report);
            vwsp_instance_free(instance);
        }
    }

    #[test]
    fn error_message_clears_after_a_success() {
        unsafe {
            let mut out: *mut VwspInstance = std::ptr::null_mut();
            let bad = CString::new("nonsense").unwrap();
            assert_eq!(
                vwsp_instance_from_json(bad.as_ptr(), &mut out),
                VwspStatus::ParseError
            );
            assert!(!vwsp_last_error_message().is_null());
            assert_eq!(
                vwsp_instance_generate(8, 0.2, 0.5, 1, &mut out),
                VwspStatus::Ok
            );
            assert!(vwsp_last_error_message().is_null());
            vwsp_instance_free(out);
        }
    }

    #[test]
    fn instances_are_shareable_across_threads() {
        unsafe {
            let mut instance: *mut VwspInstance = std::ptr::null_mut();
            assert_eq!(
                vwsp_instance_generate(10, 0.2, 1.0, 7, &mut instance),
                VwspStatus::Ok
            );
            let shared = instance as usize;
            let weights: Vec<i64> = std::thread::scope(|scope| {
                (0..4)
                    .map(|_| {
                        scope.spawn(move || {
                            let handle = shared as *const VwspInstance;
                            let mut report: *mut VwspReport = std::ptr::null_mut();
                            assert_eq!(vwsp_solve(handle, 0, &mut report), VwspStatus::Ok);
                            let weight = vwsp_report_weight(report);
                            vwsp_report_free(report);
                            weight
                        })
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .map(|t| t.join().unwrap())
                    .collect()
            });
            assert!(weights.windows(2).all(|w| w[0] == w[1]));
            vwsp_instance_free(instance);
        }
    }

    #[test]
    fn time_limits_surface_as_termination_codes() {
        unsafe {
            let mut instance: *mut VwspInstance = std::ptr::null_mut();
            assert_eq!(
                vwsp_instance_generate(25, 0.3, 1.0, 2002, &mut instance),
                VwspStatus::Ok
            );
            let mut report: *mut VwspReport = std::ptr::null_mut();
            // One millisecond is far too little for this instance.
            assert_eq!(vwsp_solve(instance, 1, &mut report), VwspStatus::Ok);
            assert_eq!(
                vwsp_report_termination(report),
                VwspTermination::TimeLimit
            );
            // A best-so-far plan is still available.
            let mut plan = vec![0u32; 25];
            assert_eq!(
                vwsp_report_plan(report, plan.as_mut_ptr(), plan.len()),
                VwspStatus::Ok
            );
            vwsp_report_free(report);
            vwsp_instance_free(instance);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            assert_eq!(
                vwsp_instance_from_json(std::ptr::null(), std::ptr::null_mut()),
                VwspStatus::NullArgument
            );
            assert_eq!(vwsp_report_weight(std::ptr::null()), -1);
            vwsp_instance_free(std::ptr::null_mut());
            vwsp_report_free(std::ptr::null_mut());
            vwsp_string_free(std::ptr::null_mut());
        }
    }
}
