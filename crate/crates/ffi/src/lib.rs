//! C ABI for dualiscope.
//!
//! Every fallible entry point returns a [`DsStatus`]. On a status other than
//! `DS_OK` and `DS_CHECK_FAILED`, [`ds_last_error`] holds a message for the
//! calling thread. Strings handed out by the library are released with
//! [`ds_string_free`]; process handles with [`ds_process_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dualiscope::cli::config::ExperimentConfig;
use dualiscope::cli::{evaluate_config, evaluate_suite, GraphSpec, Report};
use dualiscope::duality::{
    duality_product, verify_boundary_duality, verify_self_duality, DiscreteFamily,
};
use dualiscope::error::Error;
use dualiscope::model::{OccupationConfig, Process, ProcessSpec};
use dualiscope::num::to_f64;

/// Result of a call. `DS_CHECK_FAILED` means the computation ran and the
/// checked property did not hold; codes from 2 up are errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    DsOk = 0,
    DsCheckFailed = 1,
    DsNullPointer = 2,
    DsInvalidUtf8 = 3,
    DsParse = 4,
    DsInvalidArgument = 5,
    DsInvalidPairing = 6,
    DsPrecondition = 7,
    DsResource = 8,
    DsIo = 9,
    DsPanic = 10,
}

/// Opaque process bound to its graph.
pub struct DsProcess {
    inner: Process,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DsStatus {
    match e {
        Error::Parse { .. } => DsStatus::DsParse,
        Error::InvalidPairing(_) => DsStatus::DsInvalidPairing,
        Error::Precondition(_) => DsStatus::DsPrecondition,
        Error::Resource(_) => DsStatus::DsResource,
        Error::Io(_) => DsStatus::DsIo,
        Error::InvalidMove(_)
        | Error::InvalidConfig(_)
        | Error::InvalidSpec(_)
        | Error::InvalidDual(_)
        | Error::InvalidParameter(_) => DsStatus::DsInvalidArgument,
    }
}

struct Failure(DsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<DsStatus, Failure>) -> DsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            DsStatus::DsPanic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(DsStatus::DsNullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(DsStatus::DsInvalidUtf8, format!("{name}: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        Failure::from(Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    })
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            DsStatus::DsNullPointer,
            "output pointer is null".into(),
        ));
    }
    let c = CString::new(s).map_err(|e| Failure(DsStatus::DsIo, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string(v).map_err(|e| Failure(DsStatus::DsIo, e.to_string()))
}

unsafe fn read_counts<'a>(p: *const u32, len: usize, name: &str) -> Result<&'a [u32], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(DsStatus::DsNullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn jobs_of(jobs: u32) -> Option<usize> {
    (jobs > 0).then_some(jobs as usize)
}

unsafe fn finish_report(report: &Report, out_json: *mut *mut c_char) -> Result<DsStatus, Failure> {
    write_string(out_json, to_json(report)?)?;
    Ok(if report.passed {
        DsStatus::DsOk
    } else {
        DsStatus::DsCheckFailed
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a process from a JSON process spec (e.g. `{"variant":"SIP","m":"1"}`)
/// and a JSON graph spec (e.g. `{"kind":"path","sites":3}`).
#[no_mangle]
pub unsafe extern "C" fn ds_process_new(
    process_json: *const c_char,
    graph_json: *const c_char,
    out: *mut *mut DsProcess,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(
                DsStatus::DsNullPointer,
                "output pointer is null".into(),
            ));
        }
        let spec: ProcessSpec = parse_json(read_str(process_json, "process_json")?)?;
        let graph: GraphSpec = parse_json(read_str(graph_json, "graph_json")?)?;
        let inner = Process::new(spec, graph.build()?)?;
        *out = Box::into_raw(Box::new(DsProcess { inner }));
        Ok(DsStatus::DsOk)
    })
}

/// Releases a process handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ds_process_free(process: *mut DsProcess) {
    if !process.is_null() {
        drop(Box::from_raw(process));
    }
}

/// Number of sites of the process graph, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ds_process_sites(process: *const DsProcess) -> usize {
    process.as_ref().map_or(0, |p| p.inner.graph().len())
}

/// Duality function `D(xi, eta)` of a SIP or SEP handle, rounded to a double.
#[no_mangle]
pub unsafe extern "C" fn ds_process_duality(
    process: *const DsProcess,
    xi: *const u32,
    eta: *const u32,
    len: usize,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let p = process
            .as_ref()
            .ok_or_else(|| Failure(DsStatus::DsNullPointer, "process is null".into()))?;
        if out.is_null() {
            return Err(Failure(
                DsStatus::DsNullPointer,
                "output pointer is null".into(),
            ));
        }
        let family = match p.inner.spec() {
            ProcessSpec::Sip { m } => DiscreteFamily::Sip { m: m.clone() },
            ProcessSpec::Sep { n } => DiscreteFamily::Sep { n: *n },
            other => {
                return Err(Error::InvalidPairing(format!(
                    "no discrete self-duality function for {}",
                    other.name()
                ))
                .into())
            }
        };
        let sites = p.inner.graph().len();
        if len != sites {
            return Err(Error::InvalidConfig(format!(
                "configurations need {sites} sites, got {len}"
            ))
            .into());
        }
        let xi = OccupationConfig::new(read_counts(xi, len, "xi")?.to_vec());
        let eta = OccupationConfig::new(read_counts(eta, len, "eta")?.to_vec());
        p.inner.check_state(&eta)?;
        *out = to_f64(&duality_product(&xi, &eta, &family)?);
        Ok(DsStatus::DsOk)
    })
}

/// Exhaustive duality sweep for a SIP, SEP or boundary-driven SIP handle.
/// Writes the report as JSON; returns `DS_CHECK_FAILED` on a nonzero residual.
#[no_mangle]
pub unsafe extern "C" fn ds_process_verify_duality(
    process: *const DsProcess,
    max_dual: u32,
    max_occupancy: u32,
    out_json: *mut *mut c_char,
) -> DsStatus {
    guard(|| {
        let p = process
            .as_ref()
            .ok_or_else(|| Failure(DsStatus::DsNullPointer, "process is null".into()))?;
        let report = match p.inner.spec() {
            ProcessSpec::BoundaryDrivenSip { .. } => {
                verify_boundary_duality(&p.inner, max_dual, max_occupancy)?
            }
            _ => verify_self_duality(&p.inner, max_dual, max_occupancy)?,
        };
        write_string(out_json, to_json(&report)?)?;
        Ok(if report.passed() {
            DsStatus::DsOk
        } else {
            DsStatus::DsCheckFailed
        })
    })
}

/// Runs one experiment from a JSON config without writing files. `jobs` of 0
/// uses every core. Writes `{"report": ..., "cases": <csv>}`.
#[no_mangle]
pub unsafe extern "C" fn ds_run_config(
    config_json: *const c_char,
    jobs: u32,
    out_json: *mut *mut c_char,
) -> DsStatus {
    guard(|| {
        let config = ExperimentConfig::from_json(read_str(config_json, "config_json")?)?;
        let (report, table) = evaluate_config(&config, jobs_of(jobs))?;
        let payload = serde_json::json!({ "report": report, "cases": table.to_csv() });
        write_string(out_json, to_json(&payload)?)?;
        Ok(if report.passed {
            DsStatus::DsOk
        } else {
            DsStatus::DsCheckFailed
        })
    })
}

/// Runs a battery preset (`paper-exact`, `paper-stochastic` or `all`) and
/// writes its report as JSON.
#[no_mangle]
pub unsafe extern "C" fn ds_run_suite(
    preset: *const c_char,
    jobs: u32,
    out_json: *mut *mut c_char,
) -> DsStatus {
    guard(|| {
        let (report, _) = evaluate_suite(read_str(preset, "preset")?, jobs_of(jobs))?;
        finish_report(&report, out_json)
    })
}
