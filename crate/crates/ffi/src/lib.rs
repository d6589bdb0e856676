//! C interface to the benchmark runner.
//!
//! Every function returns a [`PfStatus`] and never unwinds across the
//! boundary. Objects are opaque and owned by the caller once created; free
//! them with the matching `*_free` function. After a non-`Ok` status,
//! [`pf_last_error`] gives a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use phasefrac::bench::{parse_config, run_case, Case, CaseOutcome, RunSpec};
use phasefrac::dynamics::rayleigh_wave_speed;
use phasefrac::solvers::Scheme;
use phasefrac::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// The run finished early because an increment could not be solved. The
    /// result object is still produced.
    SolverAborted = 4,
    Io = 5,
    Numerical = 6,
    /// The requested quantity does not exist for this run.
    NotAvailable = 7,
    Panic = 8,
}

/// Run specification: a preset or a parsed config file, plus overrides.
pub struct PfSpec(RunSpec);

/// Result of a finished run.
pub struct PfRun(CaseOutcome);

/// One accepted increment.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PfIncrement {
    pub increment: usize,
    pub time: f64,
    pub dt: f64,
    pub iterations: usize,
    pub cum_iterations: usize,
    pub u_applied_mm: f64,
    pub reaction_n: f64,
    pub crack_length_mm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PfStatus {
    match e {
        Error::ConfigParse { .. }
        | Error::ConfigValidation(_)
        | Error::InvalidConfig(_)
        | Error::InvalidMaterial(_) => PfStatus::Config,
        Error::Io(_) | Error::Format { .. } => PfStatus::Io,
        Error::Aborted { .. } => PfStatus::SolverAborted,
        Error::Factorization { .. }
        | Error::DistortedElement { .. }
        | Error::NegativeHistory { .. } => PfStatus::Numerical,
        _ => PfStatus::InvalidArgument,
    }
}

fn fail(status: PfStatus, msg: &str) -> PfStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> PfStatus {
    let s = status_of(&e);
    fail(s, &e.to_string())
}

/// Runs `f`, turning a panic into [`PfStatus::Panic`].
fn guard(f: impl FnOnce() -> PfStatus) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(PfStatus::Panic, &format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, PfStatus> {
    if ptr.is_null() {
        return Err(fail(PfStatus::NullPointer, &format!("{what} is null")));
    }
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        fail(
            PfStatus::InvalidArgument,
            &format!("{what} is not valid UTF-8"),
        )
    })
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

unsafe fn spec_mut<'a>(spec: *mut PfSpec) -> Result<&'a mut RunSpec, PfStatus> {
    // SAFETY: non-null pointers come from `pf_spec_*` constructors.
    unsafe { spec.as_mut() }
        .map(|s| &mut s.0)
        .ok_or_else(|| fail(PfStatus::NullPointer, "spec is null"))
}

unsafe fn run_ref<'a>(run: *const PfRun) -> Result<&'a CaseOutcome, PfStatus> {
    // SAFETY: non-null pointers come from `pf_run`.
    unsafe { run.as_ref() }
        .map(|r| &r.0)
        .ok_or_else(|| fail(PfStatus::NullPointer, "run is null"))
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the preset of `case` ("sent", "shear", "fatigue" or "dynamic").
///
/// # Safety
/// `case_name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_preset(
    case_name: *const c_char,
    out: *mut *mut PfSpec,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        let name = tri!(unsafe { read_str(case_name, "case") });
        let case: Case = tri!(name
            .parse()
            .map_err(|e: String| fail(PfStatus::InvalidArgument, &e)));
        if case == Case::Custom {
            return fail(
                PfStatus::InvalidArgument,
                "the custom case needs a config file",
            );
        }
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(PfSpec(RunSpec::preset(case)))) };
        PfStatus::Ok
    })
}

/// Parses config text. Relative paths inside it resolve against `base_dir`,
/// which may be null for the working directory.
///
/// # Safety
/// `text` and a non-null `base_dir` must be NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_parse(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut PfSpec,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        let text = tri!(unsafe { read_str(text, "text") });
        let path = if base_dir.is_null() {
            PathBuf::from("<config>")
        } else {
            PathBuf::from(tri!(unsafe { read_str(base_dir, "base_dir") })).join("<config>")
        };
        match parse_config(text, &path, None) {
            Ok(spec) => {
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(PfSpec(spec))) };
                PfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `spec` must come from a `pf_spec_*` constructor (or be null) and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_free(spec: *mut PfSpec) {
    if !spec.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// # Safety
/// `spec` must be a live spec and `scheme` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_set_scheme(spec: *mut PfSpec, scheme: *const c_char) -> PfStatus {
    guard(|| {
        let s = tri!(unsafe { spec_mut(spec) });
        let name = tri!(unsafe { read_str(scheme, "scheme") });
        match name.parse::<Scheme>() {
            Ok(k) => {
                s.scheme = k;
                PfStatus::Ok
            }
            Err(e) => fail(PfStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Reference increments of the ramp, or increments per cycle for fatigue.
///
/// # Safety
/// `spec` must be a live spec.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_set_increments(spec: *mut PfSpec, n: usize) -> PfStatus {
    guard(|| {
        let s = tri!(unsafe { spec_mut(spec) });
        if s.case == Case::Fatigue {
            s.fatigue.increments_per_cycle = n;
        } else {
            s.increments = n;
        }
        PfStatus::Ok
    })
}

/// # Safety
/// `spec` must be a live spec.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_set_adaptive(spec: *mut PfSpec, on: bool) -> PfStatus {
    guard(|| {
        tri!(unsafe { spec_mut(spec) }).adaptive = on;
        PfStatus::Ok
    })
}

/// Length scale over band element size.
///
/// # Safety
/// `spec` must be a live spec.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_set_refine(spec: *mut PfSpec, refine: f64) -> PfStatus {
    guard(|| {
        tri!(unsafe { spec_mut(spec) }).refine = refine;
        PfStatus::Ok
    })
}

/// # Safety
/// `spec` must be a live spec and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_set_output(spec: *mut PfSpec, dir: *const c_char) -> PfStatus {
    guard(|| {
        let s = tri!(unsafe { spec_mut(spec) });
        s.out = PathBuf::from(tri!(unsafe { read_str(dir, "dir") }));
        PfStatus::Ok
    })
}

/// Validates the spec, listing every problem in the error message.
///
/// # Safety
/// `spec` must be a live spec.
#[no_mangle]
pub unsafe extern "C" fn pf_spec_validate(spec: *mut PfSpec) -> PfStatus {
    guard(|| match tri!(unsafe { spec_mut(spec) }).validate() {
        Ok(()) => PfStatus::Ok,
        Err(e) => from_error(e),
    })
}

/// Runs the case and writes its outputs. On [`PfStatus::SolverAborted`]
/// `*out` still receives the partial run.
///
/// # Safety
/// `spec` must be a live spec and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_run(spec: *const PfSpec, out: *mut *mut PfRun) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        // SAFETY: non-null pointers come from `pf_spec_*` constructors.
        let Some(spec) = (unsafe { spec.as_ref() }) else {
            return fail(PfStatus::NullPointer, "spec is null");
        };
        match run_case(&spec.0) {
            Ok(outcome) => {
                let aborted = outcome.summary.abort_reason.clone();
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(PfRun(outcome))) };
                match aborted {
                    Some(reason) => fail(PfStatus::SolverAborted, &reason),
                    None => PfStatus::Ok,
                }
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `run` must come from [`pf_run`] (or be null) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pf_run_free(run: *mut PfRun) {
    if !run.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(run) });
    }
}

/// Number of accepted increments.
///
/// # Safety
/// `run` must be a live run and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_run_increments(run: *const PfRun, out: *mut usize) -> PfStatus {
    guard(|| {
        let r = tri!(unsafe { run_ref(run) });
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        // SAFETY: checked non-null above.
        unsafe { *out = r.run.log.len() };
        PfStatus::Ok
    })
}

/// Copies increment `index` (0-based).
///
/// # Safety
/// `run` must be a live run and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_run_increment(
    run: *const PfRun,
    index: usize,
    out: *mut PfIncrement,
) -> PfStatus {
    guard(|| {
        let r = tri!(unsafe { run_ref(run) });
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        let Some(rec) = r.run.log.records.get(index) else {
            return fail(
                PfStatus::InvalidArgument,
                &format!(
                    "increment {index} out of range ({} recorded)",
                    r.run.log.len()
                ),
            );
        };
        let v = PfIncrement {
            increment: rec.increment,
            time: rec.time,
            dt: rec.dt,
            iterations: rec.iterations,
            cum_iterations: rec.cum_iterations,
            u_applied_mm: rec.u_applied_mm,
            reaction_n: rec.reaction_n,
            crack_length_mm: rec.crack_length_mm,
        };
        // SAFETY: checked non-null above.
        unsafe { *out = v };
        PfStatus::Ok
    })
}

/// Headline numbers of a run. Fields without a value are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfSummary {
    pub increments: usize,
    pub cum_iterations: usize,
    pub wall_seconds: f64,
    pub peak_reaction_n: f64,
    pub critical_displacement_mm: f64,
    pub final_crack_length_mm: f64,
    pub completed: bool,
    pub history_monotone: bool,
}

/// # Safety
/// `run` must be a live run and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_run_summary(run: *const PfRun, out: *mut PfSummary) -> PfStatus {
    guard(|| {
        let r = tri!(unsafe { run_ref(run) });
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        let s = &r.summary;
        let v = PfSummary {
            increments: s.increments,
            cum_iterations: s.cum_iterations,
            wall_seconds: s.wall_seconds,
            peak_reaction_n: s.peak_reaction_n,
            critical_displacement_mm: s.critical_displacement_mm.unwrap_or(f64::NAN),
            final_crack_length_mm: s.final_crack_length_mm,
            completed: s.completed,
            history_monotone: s.history_monotone,
        };
        // SAFETY: checked non-null above.
        unsafe { *out = v };
        PfStatus::Ok
    })
}

/// Cycles to failure of a fatigue run.
///
/// # Safety
/// `run` must be a live run and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_run_cycles_to_failure(run: *const PfRun, out: *mut usize) -> PfStatus {
    guard(|| {
        let r = tri!(unsafe { run_ref(run) });
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        match r.summary.cycles_to_failure {
            Some(n) => {
                // SAFETY: checked non-null above.
                unsafe { *out = n };
                PfStatus::Ok
            }
            None => fail(PfStatus::NotAvailable, "the run did not reach failure"),
        }
    })
}

/// Rayleigh wave speed in m/s for `E` in MPa and density in kg/m^3.
#[no_mangle]
pub extern "C" fn pf_rayleigh_wave_speed(
    young_mpa: f64,
    poisson: f64,
    density: f64,
    out: *mut f64,
) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "out is null");
        }
        if !(young_mpa > 0.0 && density > 0.0 && poisson > -1.0 && poisson < 0.5) {
            return fail(
                PfStatus::InvalidArgument,
                "need E > 0, density > 0 and -1 < nu < 0.5",
            );
        }
        // SAFETY: checked non-null above.
        unsafe { *out = rayleigh_wave_speed(young_mpa, poisson, density) };
        PfStatus::Ok
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
