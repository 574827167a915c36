//! C ABI for armreach.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `_free` function. Every call returns an [`ArmreachStatus`];
//! on failure [`armreach_last_error`] describes the problem.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use armreach::arm::{ArmDesign, ArmShape};
use armreach::attain::{analyze, AnalysisSettings, AttainabilityReport, Task};
use armreach::config::design_from_str;
use armreach::lie::Wrench;
use armreach::shapes::ShapeSpec;
use armreach::statics::{continuation_solve, solve_equilibrium, SolveSettings};
use armreach::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmreachStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    PressureOutOfRange = 3,
    NotConverged = 4,
    Config = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

/// Arm design handle.
pub struct ArmreachDesign(ArmDesign);

/// Attainability report handle.
pub struct ArmreachReport(AttainabilityReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ArmreachStatus {
    match e {
        Error::PressureOutOfRange { .. } => ArmreachStatus::PressureOutOfRange,
        Error::NotConverged { .. } | Error::ContinuationFailed { .. } => ArmreachStatus::NotConverged,
        Error::Config { .. } => ArmreachStatus::Config,
        Error::InvalidDesign(_) | Error::InvalidTask(_) | Error::DimensionMismatch(_) => {
            ArmreachStatus::InvalidArgument
        }
        _ => ArmreachStatus::Internal,
    }
}

struct Fail(ArmreachStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ArmreachStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ArmreachStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ArmreachStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ArmreachStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(ArmreachStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn design_arg<'a>(d: *const ArmreachDesign) -> Result<&'a ArmDesign, Fail> {
    d.as_ref().map(|d| &d.0).ok_or_else(|| null("design"))
}

unsafe fn load_arg(p: *const f64) -> Result<Wrench, Fail> {
    let v = slice_arg(p, 3, "load")?;
    Ok(Wrench::new(v[0], v[1], v[2]))
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn armreach_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builtin design: `antagonistic`, `bellows_only` or `muscle_only`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn armreach_design_builtin(name: *const c_char, out: *mut *mut ArmreachDesign) -> ArmreachStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let d = ArmDesign::builtin(name)
            .ok_or_else(|| Fail(ArmreachStatus::InvalidArgument, format!("unknown builtin design `{name}`")))?;
        *out = Box::into_raw(Box::new(ArmreachDesign(d)));
        Ok(())
    })
}

/// Design from TOML text. Grid paths resolve against the working directory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn armreach_design_from_toml(
    text: *const c_char,
    out: *mut *mut ArmreachDesign,
) -> ArmreachStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let d = design_from_str(text, "<toml>", Path::new("."))?;
        *out = Box::into_raw(Box::new(ArmreachDesign(d)));
        Ok(())
    })
}

/// # Safety
/// `design` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn armreach_design_free(design: *mut ArmreachDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// # Safety
/// `design` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn armreach_design_actuator_count(design: *const ArmreachDesign) -> usize {
    design.as_ref().map(|d| d.0.actuator_count()).unwrap_or(0)
}

/// # Safety
/// `design` must be a valid handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn armreach_design_segments(design: *const ArmreachDesign) -> usize {
    design.as_ref().map(|d| d.0.segments).unwrap_or(0)
}

/// Equilibrium shape for `pressures` (one per actuator) and a world-frame
/// `load` of three values. Writes `(x, y, theta)` for every node, base first,
/// into `poses` (capacity `poses_len` doubles, at least `3 * (segments + 1)`)
/// and the final residual norm into `residual`. A non-positive `tolerance`
/// selects the default.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn armreach_solve(
    design: *const ArmreachDesign,
    pressures: *const f64,
    pressure_count: usize,
    load: *const f64,
    tolerance: f64,
    poses: *mut f64,
    poses_len: usize,
    residual: *mut f64,
) -> ArmreachStatus {
    guard(|| {
        let d = design_arg(design)?;
        let p = slice_arg(pressures, pressure_count, "pressures")?;
        let q = load_arg(load)?;
        if p.len() != d.actuator_count() {
            return Err(Fail(
                ArmreachStatus::InvalidArgument,
                format!("{} pressures for {} actuators", p.len(), d.actuator_count()),
            ));
        }
        let need = 3 * (d.segments + 1);
        if poses.is_null() {
            return Err(null("poses"));
        }
        if poses_len < need {
            return Err(Fail(ArmreachStatus::BufferTooSmall, format!("poses needs {need} doubles, got {poses_len}")));
        }
        let mut settings = SolveSettings::default();
        if tolerance > 0.0 {
            settings.tolerance = tolerance;
        }
        let mut r = solve_equilibrium(d, p, &q, None, &settings)?;
        if !r.converged {
            if let Ok(c) = continuation_solve(d, p, &q, 10, &settings) {
                if c.residual_norm < r.residual_norm {
                    r = c;
                }
            }
        }
        let out = std::slice::from_raw_parts_mut(poses, need);
        for (k, g) in r.shape.poses().iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(&g.as_array());
        }
        if let Some(res) = residual.as_mut() {
            *res = r.residual_norm;
        }
        if !r.converged {
            return Err(Error::NotConverged { residual: r.residual_norm }.into());
        }
        Ok(())
    })
}

fn run_analysis(
    d: &ArmDesign,
    shape: ArmShape,
    q: Wrench,
    consistent_shear: bool,
    per_edge: usize,
) -> Result<AttainabilityReport, Fail> {
    let shape = ArmShape::new(d.base_pose, shape.twists().to_vec());
    let task = if consistent_shear { Task::with_consistent_shear(d, &shape, q)? } else { Task::new(shape, q) };
    let mut settings = AnalysisSettings::default();
    if per_edge > 0 {
        settings.per_edge = per_edge;
    }
    Ok(analyze(d, &task, &settings)?)
}

/// Attainability of a named task shape (`reach`, `s_curve`, `tip_curl`) under
/// `load`. `per_edge` of 0 selects the default sampling.
///
/// # Safety
/// `design` must be valid, `name` NUL-terminated, `load` three doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn armreach_analyze_named(
    design: *const ArmreachDesign,
    name: *const c_char,
    load: *const f64,
    consistent_shear: bool,
    per_edge: usize,
    out: *mut *mut ArmreachReport,
) -> ArmreachStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let d = design_arg(design)?;
        let name = str_arg(name, "name")?;
        let q = load_arg(load)?;
        let shape = ShapeSpec::Named { name: name.into() }.build(d.segments)?;
        let r = run_analysis(d, shape, q, consistent_shear, per_edge)?;
        *out = Box::into_raw(Box::new(ArmreachReport(r)));
        Ok(())
    })
}

/// Attainability of an explicit shape given as `segments` twists of
/// `(length, shear, curvature)`, packed in `twists`.
///
/// # Safety
/// `twists` must hold `twists_len` doubles; other pointers as above.
#[no_mangle]
pub unsafe extern "C" fn armreach_analyze_twists(
    design: *const ArmreachDesign,
    twists: *const f64,
    twists_len: usize,
    load: *const f64,
    consistent_shear: bool,
    per_edge: usize,
    out: *mut *mut ArmreachReport,
) -> ArmreachStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let d = design_arg(design)?;
        let t = slice_arg(twists, twists_len, "twists")?;
        if t.len() != 3 * d.segments {
            return Err(Fail(
                ArmreachStatus::InvalidArgument,
                format!("{} twist values for {} segments", t.len(), d.segments),
            ));
        }
        let q = load_arg(load)?;
        let list: Vec<[f64; 3]> = t.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let shape = ShapeSpec::Twists { twists: list }.build(d.segments)?;
        let r = run_analysis(d, shape, q, consistent_shear, per_edge)?;
        *out = Box::into_raw(Box::new(ArmreachReport(r)));
        Ok(())
    })
}

/// # Safety
/// `report` must be valid or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn armreach_report_absolute(report: *const ArmreachReport) -> f64 {
    report.as_ref().map(|r| r.0.absolute_unattainability).unwrap_or(f64::NAN)
}

/// # Safety
/// `report` must be valid or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn armreach_report_relative(report: *const ArmreachReport) -> f64 {
    report.as_ref().map(|r| r.0.relative_unattainability).unwrap_or(f64::NAN)
}

/// # Safety
/// `report` must be valid or null (returns false).
#[no_mangle]
pub unsafe extern "C" fn armreach_report_attainable(report: *const ArmreachReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.attainable)
}

/// # Safety
/// `report` must be valid or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn armreach_report_node_count(report: *const ArmreachReport) -> usize {
    report.as_ref().map(|r| r.0.per_node_absolute.len()).unwrap_or(0)
}

/// Per-node absolute and relative distances; either output may be null.
///
/// # Safety
/// Non-null outputs must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn armreach_report_per_node(
    report: *const ArmreachReport,
    absolute: *mut f64,
    relative: *mut f64,
    len: usize,
) -> ArmreachStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let n = r.per_node_absolute.len();
        if len < n {
            return Err(Fail(ArmreachStatus::BufferTooSmall, format!("need {n} values, got {len}")));
        }
        if !absolute.is_null() {
            std::slice::from_raw_parts_mut(absolute, n).copy_from_slice(&r.per_node_absolute);
        }
        if !relative.is_null() {
            std::slice::from_raw_parts_mut(relative, n).copy_from_slice(&r.per_node_relative);
        }
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn armreach_report_free(report: *mut ArmreachReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NotConverged { residual: 1.0 }), ArmreachStatus::NotConverged);
        assert_eq!(status_of(&Error::InvalidTask("x".into())), ArmreachStatus::InvalidArgument);
        assert_eq!(status_of(&Error::AllInfeasible), ArmreachStatus::Internal);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), ArmreachStatus::Panic);
        let msg = unsafe { CStr::from_ptr(armreach_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}
