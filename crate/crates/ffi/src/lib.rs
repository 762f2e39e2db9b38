//! C ABI for the `hybridfp` solver.
//!
//! Every fallible call returns an [`HfpStatus`]. On failure a message is
//! stored per thread and can be fetched with [`hfp_last_error_message`].
//! Handles are opaque; free them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use hybridfp::config::{load_scenario, ScenarioConfig};
use hybridfp::integrate::{run, Solver};
use hybridfp::montecarlo::run_mc_with;
use hybridfp::output::{write_outputs, Source};
use hybridfp::{Error, Scenario};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Rejected configuration, CFL violation or other validation failure.
    Validation = 3,
    /// Numerical failure during a run.
    Runtime = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque scenario handle.
pub struct HfpScenario {
    inner: Scenario,
}

/// Opaque stepping solver handle.
pub struct HfpSolver {
    inner: Solver,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(HfpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = if e.is_validation() {
            HfpStatus::Validation
        } else if matches!(e, Error::Io { .. }) {
            HfpStatus::Io
        } else {
            HfpStatus::Runtime
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HfpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(HfpStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HfpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HfpStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn scenario_ref<'a>(p: *const HfpScenario) -> Result<&'a Scenario, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("scenario"))
}

unsafe fn solver_ref<'a>(p: *const HfpSolver) -> Result<&'a Solver, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("solver"))
}

fn mode_index(scenario: &Scenario, mode: usize) -> Result<usize, Fail> {
    if mode < scenario.modes().len() {
        Ok(mode)
    } else {
        Err(invalid(format!(
            "mode index {mode} out of range (scenario has {} modes)",
            scenario.modes().len()
        )))
    }
}

fn boxed<T>(value: T, out: &mut *mut T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hfp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf`, truncating to
/// `len - 1` bytes. Returns the full message length excluding the NUL, or 0
/// when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hfp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Load and validate a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_scenario_load(path: *const c_char, out: *mut *mut HfpScenario) -> HfpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path, "path")?;
        boxed(HfpScenario { inner: load_scenario(&path)? }, out);
        Ok(())
    })
}

/// Build the reference scenario with all parameters at their defaults.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_scenario_default(out: *mut *mut HfpScenario) -> HfpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        boxed(HfpScenario { inner: ScenarioConfig::default().build()? }, out);
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hfp_scenario_free(scenario: *mut HfpScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hfp_scenario_n_modes(scenario: *const HfpScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.inner.modes().len())
}

/// Cell count of mode `mode` (0-based), including inactive cells.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_scenario_n_cells(
    scenario: *const HfpScenario,
    mode: usize,
    out: *mut usize,
) -> HfpStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let out = out_arg(out, "out")?;
        *out = s.modes()[mode_index(s, mode)?].mesh().n_cells();
        Ok(())
    })
}

/// Time step and step count of the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `dt` and `n_steps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_scenario_time_grid(
    scenario: *const HfpScenario,
    dt: *mut f64,
    n_steps: *mut usize,
) -> HfpStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        *out_arg(dt, "dt")? = s.dt();
        *out_arg(n_steps, "n_steps")? = s.n_steps();
        Ok(())
    })
}

/// Create a solver at the initial density. The scenario is copied, so the
/// scenario handle may be freed afterwards.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_new(scenario: *const HfpScenario, out: *mut *mut HfpSolver) -> HfpStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let out = out_arg(out, "out")?;
        boxed(HfpSolver { inner: Solver::new(s.clone())? }, out);
        Ok(())
    })
}

/// # Safety
/// `solver` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_free(solver: *mut HfpSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Advance by up to `n` steps, stopping at the final time. The number of
/// steps actually taken is written to `taken` when it is non-null.
///
/// # Safety
/// `solver` must be a live handle; `taken` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_step(solver: *mut HfpSolver, n: usize, taken: *mut usize) -> HfpStatus {
    let mut done = 0;
    let status = guard(|| {
        let solver = &mut solver.as_mut().ok_or_else(|| null("solver"))?.inner;
        while done < n && !solver.is_finished() {
            solver.step()?;
            done += 1;
        }
        Ok(())
    });
    if let Some(t) = taken.as_mut() {
        *t = done;
    }
    status
}

/// Whether the solver has reached the final time.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_is_finished(solver: *const HfpSolver) -> bool {
    solver.as_ref().is_none_or(|s| s.inner.is_finished())
}

/// Current time of the solver.
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_time(solver: *const HfpSolver, out: *mut f64) -> HfpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        *out_arg(out, "out")? = s.state().t;
        Ok(())
    })
}

/// Probability mass currently held by mode `mode` (0-based).
///
/// # Safety
/// `solver` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_mode_mass(solver: *const HfpSolver, mode: usize, out: *mut f64) -> HfpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let k = mode_index(s.scenario(), mode)?;
        *out_arg(out, "out")? = s.state().mode_masses(s.scenario())[k];
        Ok(())
    })
}

/// Copy the cell densities of mode `mode` into `buf`, which must hold
/// exactly the mode's cell count (see [`hfp_scenario_n_cells`]). Cells are
/// ordered with the first axis fastest.
///
/// # Safety
/// `solver` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hfp_solver_copy_density(
    solver: *const HfpSolver,
    mode: usize,
    buf: *mut f64,
    len: usize,
) -> HfpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let k = mode_index(s.scenario(), mode)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let field = &s.state().fields[k];
        if len != field.len() {
            return Err(invalid(format!("buffer holds {len} values, mode has {} cells", field.len())));
        }
        std::ptr::copy_nonoverlapping(field.as_ptr(), buf, len);
        Ok(())
    })
}

/// Run the full integration and write the mass series and snapshots into
/// directory `dir`.
///
/// # Safety
/// `scenario` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hfp_run_to_dir(scenario: *const HfpScenario, dir: *const c_char) -> HfpStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let dir = path_arg(dir, "dir")?;
        let record = run(s)?;
        write_outputs(s, &record.series, &record.snapshots, &dir, Source::Pde)?;
        Ok(())
    })
}

/// Run the particle simulation with `n_particles` particles and write its
/// outputs into `dir`.
///
/// # Safety
/// `scenario` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hfp_mc_to_dir(
    scenario: *const HfpScenario,
    n_particles: usize,
    seed: u64,
    dir: *const c_char,
) -> HfpStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let dir = path_arg(dir, "dir")?;
        let record = run_mc_with(s, n_particles, seed)?;
        write_outputs(s, &record.series, &record.snapshots, &dir, Source::Mc)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, HfpStatus::Panic);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { hfp_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
        assert_eq!(n, msg.len());
    }

    #[test]
    fn error_message_truncates() {
        set_error("abcdefgh");
        let mut buf = [1 as c_char; 4];
        let n = unsafe { hfp_last_error_message(buf.as_mut_ptr(), 4) };
        assert_eq!(n, 8);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes(), b"abc");
        clear_error();
        assert_eq!(unsafe { hfp_last_error_message(buf.as_mut_ptr(), 4) }, 0);
        assert_eq!(buf[0], 0);
    }

    #[test]
    fn version_is_package_version() {
        let v = unsafe { CStr::from_ptr(hfp_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
