//! C ABI over `poisson-corners`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`PcStatus`]; on failure [`pc_last_error`] describes the problem.
//! Strings returned through out-parameters are released with
//! [`pc_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use poisson_corners::cli::{check_poisson_battery, check_sheaf, fibre_report, stalk_report};
use poisson_corners::corners::ModelSpace;
use poisson_corners::expr::{canonicalize, differentiate, evaluate, parse, Expr, Point, Rational};
use poisson_corners::manifest::{load_manifest, Manifest};
use poisson_corners::poisson::{bracket, check_poisson, BivectorField};
use poisson_corners::report::ReportDocument;
use poisson_corners::sampling::SamplingConfig;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Evaluation = 4,
    InvalidArgument = 5,
    Load = 6,
    Command = 7,
    Panic = 8,
}

/// A parsed expression.
pub struct PcExpr(Expr);

/// An antisymmetric bivector field.
pub struct PcBivector(BivectorField);

/// A validated manifest.
pub struct PcManifest(Manifest);

/// Report flavours accepted by [`pc_manifest_report`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcCommand {
    CheckSheaf = 0,
    CheckPoisson = 1,
    Fibre = 2,
    Stalk = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: PcStatus, message: impl Into<String>) -> PcStatus {
    set_error(message);
    status
}

/// Runs `body`, turning panics into [`PcStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<(), (PcStatus, String)>) -> PcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err((status, message))) => fail(status, message),
        Err(_) => fail(PcStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PcStatus, String)> {
    if p.is_null() {
        return Err((PcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (PcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PcStatus, String)> {
    p.as_ref().ok_or_else(|| (PcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (PcStatus, String)> {
    if out.is_null() {
        return Err((PcStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn pc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `source` over `dimension` variables `x1..xn`.
#[no_mangle]
pub unsafe extern "C" fn pc_expr_parse(source: *const c_char, dimension: usize, out: *mut *mut PcExpr) -> PcStatus {
    guard(|| {
        let e = parse(text(source, "source")?, dimension).map_err(|e| (PcStatus::Parse, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(PcExpr(e))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_expr_free(e: *mut PcExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Canonical form of `e`.
#[no_mangle]
pub unsafe extern "C" fn pc_expr_canonicalize(e: *const PcExpr, out: *mut *mut PcExpr) -> PcStatus {
    guard(|| {
        let c = canonicalize(&handle(e, "expression")?.0);
        write_out(out, Box::into_raw(Box::new(PcExpr(c))))
    })
}

/// Printed form of `e`; free with [`pc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pc_expr_to_string(e: *const PcExpr, out: *mut *mut c_char) -> PcStatus {
    guard(|| {
        let s = handle(e, "expression")?.0.to_string();
        write_out(out, c_string(s))
    })
}

/// Canonical partial derivative in `x_var` (1-based).
#[no_mangle]
pub unsafe extern "C" fn pc_expr_differentiate(e: *const PcExpr, var: usize, out: *mut *mut PcExpr) -> PcStatus {
    guard(|| {
        if var == 0 {
            return Err((PcStatus::InvalidArgument, "variables are numbered from 1".into()));
        }
        let d = differentiate(&handle(e, "expression")?.0, var);
        write_out(out, Box::into_raw(Box::new(PcExpr(d))))
    })
}

/// Value of `e` at the point with `len` coordinates.
#[no_mangle]
pub unsafe extern "C" fn pc_expr_evaluate(e: *const PcExpr, coords: *const f64, len: usize, out: *mut f64) -> PcStatus {
    guard(|| {
        let e = handle(e, "expression")?;
        if coords.is_null() && len > 0 {
            return Err((PcStatus::NullPointer, "coordinates are null".into()));
        }
        let raw = if len == 0 { &[][..] } else { std::slice::from_raw_parts(coords, len) };
        let point = raw
            .iter()
            .map(|c| Rational::from_float(*c))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| (PcStatus::InvalidArgument, "coordinates must be finite".into()))?;
        let v = evaluate(&e.0, &Point::new(point)).map_err(|e| (PcStatus::Evaluation, e.to_string()))?;
        write_out(out, v)
    })
}

/// Bivector on `R^n_k` from `count` upper-triangle entries
/// `pi^{rows[t] cols[t]} = exprs[t]`; unlisted entries are zero.
#[no_mangle]
pub unsafe extern "C" fn pc_bivector_new(
    n: usize,
    k: usize,
    rows: *const usize,
    cols: *const usize,
    exprs: *const *const PcExpr,
    count: usize,
    out: *mut *mut PcBivector,
) -> PcStatus {
    guard(|| {
        let space = ModelSpace::new(n, k).map_err(|e| (PcStatus::InvalidArgument, e.to_string()))?;
        if count > 0 && (rows.is_null() || cols.is_null() || exprs.is_null()) {
            return Err((PcStatus::NullPointer, "entry arrays are null".into()));
        }
        let mut entries = Vec::with_capacity(count);
        for t in 0..count {
            let e = handle(*exprs.add(t), "entry expression")?;
            entries.push(((*rows.add(t), *cols.add(t)), e.0.clone()));
        }
        let pi =
            BivectorField::from_entries(space, &entries).map_err(|e| (PcStatus::InvalidArgument, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(PcBivector(pi))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_bivector_free(b: *mut PcBivector) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Canonical `{f, g}` under `pi`.
#[no_mangle]
pub unsafe extern "C" fn pc_bracket(
    f: *const PcExpr,
    g: *const PcExpr,
    pi: *const PcBivector,
    out: *mut *mut PcExpr,
) -> PcStatus {
    guard(|| {
        let b = bracket(&handle(f, "f")?.0, &handle(g, "g")?.0, &handle(pi, "bivector")?.0)
            .map_err(|e| (PcStatus::InvalidArgument, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(PcExpr(b))))
    })
}

/// Jacobi check of `pi`: `passed` is 1 when the Jacobi identity holds,
/// `worst_defect` the largest sampled coordinate-triple defect.
#[no_mangle]
pub unsafe extern "C" fn pc_check_poisson(
    pi: *const PcBivector,
    seed: u64,
    passed: *mut i32,
    worst_defect: *mut f64,
) -> PcStatus {
    guard(|| {
        let report = check_poisson(&handle(pi, "bivector")?.0, &SamplingConfig::with_seed(seed));
        write_out(passed, report.passed() as i32)?;
        write_out(worst_defect, report.worst_defect)
    })
}

/// Loads and validates the JSON manifest at `path`.
#[no_mangle]
pub unsafe extern "C" fn pc_manifest_load(path: *const c_char, seed: u64, out: *mut *mut PcManifest) -> PcStatus {
    guard(|| {
        let path = text(path, "path")?;
        let m = load_manifest(Path::new(path), &SamplingConfig::with_seed(seed))
            .map_err(|e| (PcStatus::Load, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(PcManifest(m))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pc_manifest_free(m: *mut PcManifest) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Runs a report command on `m` and writes its text (or JSON when `json`
/// is nonzero) to `report` and its exit code (0 or 1) to `exit_code`.
///
/// `arg1` names the fibre product for `Fibre` and the section for `Stalk`;
/// `arg2` is the point for `Stalk`. Both are ignored otherwise and may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn pc_manifest_report(
    m: *const PcManifest,
    command: PcCommand,
    arg1: *const c_char,
    arg2: *const c_char,
    json: i32,
    report: *mut *mut c_char,
    exit_code: *mut i32,
) -> PcStatus {
    guard(|| {
        let m = &handle(m, "manifest")?.0;
        let command_error = |e: poisson_corners::cli::CommandError| (PcStatus::Command, e.to_string());
        let doc: ReportDocument = match command {
            PcCommand::CheckSheaf => check_sheaf(m),
            PcCommand::CheckPoisson => check_poisson_battery(m).map_err(command_error)?,
            PcCommand::Fibre => fibre_report(m, text(arg1, "fibre name")?).map_err(command_error)?,
            PcCommand::Stalk => {
                stalk_report(m, text(arg1, "section name")?, text(arg2, "point")?).map_err(command_error)?
            }
        };
        if report.is_null() || exit_code.is_null() {
            return Err((PcStatus::NullPointer, "output pointer is null".into()));
        }
        let body = if json != 0 { doc.to_json() } else { doc.to_text() };
        write_out(exit_code, doc.exit_code())?;
        write_out(report, c_string(body))
    })
}
