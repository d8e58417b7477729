//! C interface to the sparsest-cut toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `*_free` function. Every fallible call returns an [`ScStatus`]; on a
//! non-zero status, [`sc_last_error_message`] describes the failure on the
//! calling thread. Strings returned through `char **` outputs are owned by the
//! caller and released with [`sc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sparsecut::combdiam::{combinatorial_diameter, Method};
use sparsecut::error::Error;
use sparsecut::instance::CutInstance;
use sparsecut::oracle::brute_force;
use sparsecut::pipeline::{self, SolveOptions, TransformSpec};
use sparsecut::shallow::Mode;
use sparsecut::treedec::{balance, min_fill_decomposition, TreeDecomposition};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent instance or decomposition.
    InvalidInput = 3,
    InvalidParams = 4,
    /// Input beyond a documented size cap, or a search budget was exhausted.
    TooLarge = 5,
    /// The LP or rounding stage failed.
    SolverFailure = 6,
    /// A check inside the library failed; this is a bug.
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScMode {
    None = 0,
    Bridges = 1,
    Highways = 2,
    SuperHighways = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScMethod {
    Greedy = 0,
    Exact = 1,
}

/// Opaque cut instance.
pub struct ScInstance(CutInstance);

/// Opaque tree decomposition.
pub struct ScDecomposition(TreeDecomposition);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ScStatus {
    match e {
        Error::InvalidInstance(_)
        | Error::InvalidDecomposition(_)
        | Error::Parse(_)
        | Error::Json(_)
        | Error::Io(_) => ScStatus::InvalidInput,
        Error::InvalidParams(_) | Error::TooManyDemands { .. } | Error::IndexOutOfRange { .. } => {
            ScStatus::InvalidParams
        }
        Error::TooLarge(_) | Error::Exceeded { .. } => ScStatus::TooLarge,
        Error::Infeasible
        | Error::Unbounded
        | Error::DegenerateDenominator
        | Error::AllRunsDegenerate
        | Error::NoDemandSeparated
        | Error::PairNotCovered(..)
        | Error::PairNotConnected(..)
        | Error::ZeroProbabilityCondition(_) => ScStatus::SolverFailure,
        Error::TraceFailed(..) | Error::InconsistencyDetected(_) | Error::EndpointNotInBag(_) => ScStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), ScStatus>) -> ScStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ScStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("panic inside sparsecut");
            ScStatus::Panic
        }
    }
}

fn fail(e: Error) -> ScStatus {
    set_last_error(&format!("{}: {e}", e.code()));
    status_of(&e)
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ScStatus> {
    if s.is_null() {
        set_last_error("null string argument");
        return Err(ScStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_last_error("argument is not valid UTF-8");
        ScStatus::InvalidUtf8
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, ScStatus> {
    p.as_ref().ok_or_else(|| {
        set_last_error("null handle argument");
        ScStatus::NullPointer
    })
}

fn check_out<T>(out: *mut T) -> Result<(), ScStatus> {
    if out.is_null() {
        set_last_error("null output pointer");
        return Err(ScStatus::NullPointer);
    }
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), ScStatus> {
    let c = CString::new(s).map_err(|_| ScStatus::Internal)?;
    *out = c.into_raw();
    Ok(())
}

fn transform_spec(mode: ScMode, param: u32) -> Result<TransformSpec, ScStatus> {
    let mode = match mode {
        ScMode::None => None,
        ScMode::Bridges => Some(Mode::Bridges),
        ScMode::Highways => Some(Mode::Highways),
        ScMode::SuperHighways => Some(Mode::SuperHighways),
    };
    if mode.is_some() && param == 0 {
        return Err(fail(Error::InvalidParams("lambda and q must be at least 1".into())));
    }
    let p = param.max(1) as usize;
    Ok(TransformSpec { mode, lambda: p, q: p })
}

/// Parses an instance from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_instance_from_json(json: *const c_char, out: *mut *mut ScInstance) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let inst = CutInstance::from_json(read_str(json)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(ScInstance(inst)));
        Ok(())
    })
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_instance_vertex_count(inst: *const ScInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n())
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sc_instance_free(inst: *mut ScInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Parses a decomposition from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_from_json(json: *const c_char, out: *mut *mut ScDecomposition) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let t = TreeDecomposition::from_json(read_str(json)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(ScDecomposition(t)));
        Ok(())
    })
}

/// Min-fill decomposition of the instance's graph.
///
/// # Safety
/// `inst` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_min_fill(
    inst: *const ScInstance,
    out: *mut *mut ScDecomposition,
) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let t = min_fill_decomposition(deref(inst)?.0.graph());
        *out = Box::into_raw(Box::new(ScDecomposition(t)));
        Ok(())
    })
}

/// Rebalanced copy of `dec` with logarithmic depth.
///
/// # Safety
/// `dec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_balance(
    dec: *const ScDecomposition,
    out: *mut *mut ScDecomposition,
) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let t = balance(&deref(dec)?.0);
        *out = Box::into_raw(Box::new(ScDecomposition(t)));
        Ok(())
    })
}

/// Shallow transform of `dec`. `param` is lambda for bridges and highways and
/// q for super-highways; it must be at least 1.
///
/// # Safety
/// `dec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_transform(
    dec: *const ScDecomposition,
    mode: ScMode,
    param: u32,
    out: *mut *mut ScDecomposition,
) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let t = &deref(dec)?.0;
        let spec = transform_spec(mode, param)?;
        let used = pipeline::apply_transform(t, &spec).map_or_else(|| t.clone(), |s| s.decomposition);
        *out = Box::into_raw(Box::new(ScDecomposition(used)));
        Ok(())
    })
}

/// Serialises `dec` as decomposition JSON.
///
/// # Safety
/// `dec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_to_json(dec: *const ScDecomposition, out: *mut *mut c_char) -> ScStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, deref(dec)?.0.to_json())
    })
}

/// Width (largest bag size minus one).
///
/// # Safety
/// `dec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_width(dec: *const ScDecomposition, out: *mut usize) -> ScStatus {
    guard(|| {
        check_out(out)?;
        *out = deref(dec)?.0.width();
        Ok(())
    })
}

/// Depth of the rooted tree.
///
/// # Safety
/// `dec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_depth(dec: *const ScDecomposition, out: *mut usize) -> ScStatus {
    guard(|| {
        check_out(out)?;
        *out = deref(dec)?.0.depth();
        Ok(())
    })
}

/// # Safety
/// `dec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sc_decomposition_free(dec: *mut ScDecomposition) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Combinatorial diameter over all node pairs. `budget` caps the exact search.
///
/// # Safety
/// `dec` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_combinatorial_diameter(
    dec: *const ScDecomposition,
    method: ScMethod,
    budget: usize,
    out: *mut usize,
) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let method = match method {
            ScMethod::Greedy => Method::Greedy,
            ScMethod::Exact => Method::Exact,
        };
        *out = combinatorial_diameter(&deref(dec)?.0, method, budget).map_err(fail)?.diameter;
        Ok(())
    })
}

/// Exhaustive sparsest cut, as JSON `{"phi", "cut", "enumerated"}`.
///
/// # Safety
/// `inst` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_oracle_brute_force(inst: *const ScInstance, out: *mut *mut c_char) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let res = brute_force(&deref(inst)?.0).map_err(fail)?;
        put_string(out, res.to_json().to_string())
    })
}

/// Full pipeline. `dec` may be null to use a min-fill decomposition. The result
/// is JSON `{"alpha", "cut", "sparsity", "oracle_sparsity", "diameter_used"}`.
///
/// # Safety
/// `inst` must be a live handle, `dec` null or a live handle, and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_solve(
    inst: *const ScInstance,
    dec: *const ScDecomposition,
    mode: ScMode,
    param: u32,
    trials: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> ScStatus {
    guard(|| {
        check_out(out)?;
        let inst = &deref(inst)?.0;
        let dec = dec.as_ref().map(|d| d.0.clone());
        let opts = SolveOptions { transform: transform_spec(mode, param)?, trials, seed, ..SolveOptions::default() };
        let report = pipeline::solve(inst, dec, &opts).map_err(fail)?;
        put_string(out, report.to_json().to_string())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_arguments_are_reported() {
        let mut out = ptr::null_mut();
        let status = unsafe { sc_instance_from_json(ptr::null(), &mut out) };
        assert_eq!(status, ScStatus::NullPointer);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(sc_last_error_message()) };
        assert!(!msg.to_bytes().is_empty());
    }

    #[test]
    fn zero_param_rejected() {
        assert!(transform_spec(ScMode::Highways, 0).is_err());
        assert_eq!(transform_spec(ScMode::None, 0).unwrap().mode, None);
    }
}
