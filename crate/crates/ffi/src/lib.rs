//! C ABI over the `valex` engine.
//!
//! Handles are opaque and owned by the caller; every `*_parse`/`*_solve`
//! result must be released with the matching `*_free`. Strings returned
//! through out-parameters are heap-allocated and released with
//! [`valex_string_free`]. On any non-OK status, [`valex_last_error_message`]
//! describes the failure for the calling thread.

#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use valex::bundle::Bundle;
use valex::render::render_proof_tree;
use valex::retraction::{retract, verify_retraction, SolverState};
use valex::{parse_model, solve, Error, Explanations, Model, SearchTree};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValexStatus {
    Ok = 0,
    NotFound = 1,
    NullPointer = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    UsageError = 5,
    InternalError = 6,
}

/// A parsed model.
pub struct ValexModel {
    model: Model,
}

/// A complete search tree with its explanations.
pub struct ValexSolve {
    tree: SearchTree,
    explanations: Explanations,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: ValexStatus, msg: impl Into<String>) -> ValexStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> ValexStatus {
    match e {
        Error::Parse { .. } | Error::DuplicateVariable(_) | Error::EmptyDomain(_) | Error::MalformedConstraint(_) => {
            ValexStatus::ParseError
        }
        Error::UnknownVariable(_) | Error::UnknownConstraint(_) | Error::ValueOutsideDomain { .. } => {
            ValexStatus::NotFound
        }
        Error::Usage(_) | Error::EnumerationCap { .. } => ValexStatus::UsageError,
        Error::LogCorruption(_) | Error::Bundle(_) => ValexStatus::InternalError,
    }
}

fn guard(f: impl FnOnce() -> ValexStatus) -> ValexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == ValexStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(ValexStatus::InternalError, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, ValexStatus> {
    if p.is_null() {
        return Err(fail(ValexStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ValexStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> ValexStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            ValexStatus::Ok
        }
        Err(_) => fail(ValexStatus::InternalError, "output contains a NUL byte"),
    }
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(ValexStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Parses model text; on success `*out` receives a new handle.
///
/// # Safety
///
/// `text` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_model_parse(text: *const c_char, out: *mut *mut ValexModel) -> ValexStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = try_ffi!(read_str(text));
        match parse_model(text) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(ValexModel { model }));
                ValexStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
///
/// `model` must be null or a handle from [`valex_model_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn valex_model_free(model: *mut ValexModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Builds the complete search tree of `model` and its proof trees.
///
/// # Safety
///
/// `model` must be null or a live model handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_solve(model: *const ValexModel, out: *mut *mut ValexSolve) -> ValexStatus {
    guard(|| {
        non_null!(model, out);
        *out = ptr::null_mut();
        let m = &(*model).model;
        let tree = solve(&m.csp, &m.labeling);
        match Explanations::build(&tree) {
            Ok(explanations) => {
                *out = Box::into_raw(Box::new(ValexSolve { tree, explanations }));
                ValexStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Releases a solve; null is ignored.
///
/// # Safety
///
/// `solve` must be null or a handle from [`valex_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn valex_solve_free(solve: *mut ValexSolve) {
    if !solve.is_null() {
        drop(Box::from_raw(solve));
    }
}

/// # Safety
///
/// `solve` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_solve_solution_count(solve: *const ValexSolve, out: *mut usize) -> ValexStatus {
    guard(|| {
        non_null!(solve, out);
        *out = (*solve).tree.solutions().len();
        ValexStatus::Ok
    })
}

/// Number of leaves of the search tree.
///
/// # Safety
///
/// `solve` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_solve_branch_count(solve: *const ValexSolve, out: *mut usize) -> ValexStatus {
    guard(|| {
        non_null!(solve, out);
        *out = (*solve).tree.leaves().count();
        ValexStatus::Ok
    })
}

/// # Safety
///
/// `solve` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_solve_failure_count(solve: *const ValexSolve, out: *mut usize) -> ValexStatus {
    guard(|| {
        non_null!(solve, out);
        *out = (*solve).tree.failure_count();
        ValexStatus::Ok
    })
}

/// The JSON bundle of the solve.
///
/// # Safety
///
/// `solve` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_solve_export_json(solve: *const ValexSolve, out: *mut *mut c_char) -> ValexStatus {
    guard(|| {
        non_null!(solve, out);
        *out = ptr::null_mut();
        let s = &*solve;
        write_string(out, Bundle::from_solve(&s.tree, &s.explanations).to_json())
    })
}

/// Renders the maximal proof tree for `(var, value)`.
///
/// Returns `VALEX_STATUS_NOT_FOUND` if the element is unknown or never removed.
///
/// # Safety
///
/// `solve` must be null or a live handle, `var` null or NUL-terminated, `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_solve_explain(
    solve: *const ValexSolve,
    var: *const c_char,
    value: i64,
    out: *mut *mut c_char,
) -> ValexStatus {
    guard(|| {
        non_null!(solve, out);
        *out = ptr::null_mut();
        let var = try_ffi!(read_str(var));
        let s = &*solve;
        let csp = s.tree.csp();
        let h = match csp.element(var, value) {
            Ok(h) => h,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        match s.explanations.explain(h) {
            Some(t) => write_string(out, render_proof_tree(t, csp.domain())),
            None => fail(ValexStatus::NotFound, "not removed in any branch"),
        }
    })
}

/// Retracts `constraint` from the closure of `model`; `*out` receives the
/// repaired domains and `*verified` whether they match a fresh closure.
///
/// # Safety
///
/// `model` must be null or a live handle, `constraint` null or NUL-terminated, `verified` and `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn valex_model_retract(
    model: *const ValexModel,
    constraint: *const c_char,
    verified: *mut bool,
    out: *mut *mut c_char,
) -> ValexStatus {
    guard(|| {
        non_null!(model, verified, out);
        *out = ptr::null_mut();
        let constraint = try_ffi!(read_str(constraint));
        let csp = &(*model).model.csp;
        let state = SolverState::new(csp);
        let result = retract(&state, constraint)
            .and_then(|after| verify_retraction(&state, constraint, &after).map(|ok| (after, ok)));
        match result {
            Ok((after, ok)) => {
                *verified = ok;
                write_string(out, after.env().to_string())
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
///
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn valex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn valex_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
