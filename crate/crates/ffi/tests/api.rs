use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use armreach_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(armreach_last_error()) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut ArmreachDesign {
    let name = CString::new(name).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { armreach_design_builtin(name.as_ptr(), &mut d) }, ArmreachStatus::Ok);
    assert!(!d.is_null());
    d
}

#[test]
fn design_lifecycle() {
    let d = builtin("antagonistic");
    unsafe {
        assert_eq!(armreach_design_actuator_count(d), 4);
        assert_eq!(armreach_design_segments(d), 5);
        armreach_design_free(d);
        armreach_design_free(ptr::null_mut());
        assert_eq!(armreach_design_segments(ptr::null()), 0);
    }
    let bad = CString::new("nope").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { armreach_design_builtin(bad.as_ptr(), &mut d) }, ArmreachStatus::InvalidArgument);
    assert!(d.is_null());
    assert!(last_error().contains("nope"));
    assert_eq!(unsafe { armreach_design_builtin(ptr::null(), &mut d) }, ArmreachStatus::NullPointer);
}

#[test]
fn toml_design_errors_name_the_field() {
    let text = CString::new("name = \"x\"\nsegments = 3\n[[actuators]]\nkind = \"bellows\"\noffset = 0.02\nneutral_length = -1.0\n[[actuators]]\nkind = \"bellows\"\noffset = -0.02\nneutral_length = 0.5\n").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { armreach_design_from_toml(text.as_ptr(), &mut d) }, ArmreachStatus::Config);
    let msg = last_error();
    assert!(msg.contains("neutral_length") && msg.contains("line 6"), "{msg}");

    let ok = CString::new("builtin = \"bellows_only\"\nsegments = 4\n").unwrap();
    assert_eq!(unsafe { armreach_design_from_toml(ok.as_ptr(), &mut d) }, ArmreachStatus::Ok);
    assert_eq!(unsafe { armreach_design_segments(d) }, 4);
    unsafe { armreach_design_free(d) };
}

#[test]
fn solve_and_round_trip_through_analysis() {
    let d = builtin("antagonistic");
    let p = [20e3, 5e3, 10e3, 30e3];
    let load = [1.0, -2.0, 0.1];
    let mut poses = [0.0; 18];
    let mut res = f64::NAN;
    let status =
        unsafe { armreach_solve(d, p.as_ptr(), 4, load.as_ptr(), 1e-9, poses.as_mut_ptr(), poses.len(), &mut res) };
    assert_eq!(status, ArmreachStatus::Ok, "{}", last_error());
    assert!(res <= 1e-9);
    assert_eq!(&poses[..3], &[0.0, 0.0, 0.0]);

    let mut small = [0.0; 5];
    let status =
        unsafe { armreach_solve(d, p.as_ptr(), 4, load.as_ptr(), 0.0, small.as_mut_ptr(), 5, ptr::null_mut()) };
    assert_eq!(status, ArmreachStatus::BufferTooSmall);
    let high = [1e9, 0.0, 0.0, 0.0];
    let status =
        unsafe { armreach_solve(d, high.as_ptr(), 4, load.as_ptr(), 0.0, poses.as_mut_ptr(), 18, ptr::null_mut()) };
    assert_eq!(status, ArmreachStatus::PressureOutOfRange);
    let status =
        unsafe { armreach_solve(d, p.as_ptr(), 3, load.as_ptr(), 0.0, poses.as_mut_ptr(), 18, ptr::null_mut()) };
    assert_eq!(status, ArmreachStatus::InvalidArgument);
    unsafe { armreach_design_free(d) };
}

#[test]
fn analysis_reports() {
    let d = builtin("antagonistic");
    let name = CString::new("reach").unwrap();
    let load = [0.0, 0.0, 0.0];
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { armreach_analyze_named(d, name.as_ptr(), load.as_ptr(), true, 0, &mut r) }, ArmreachStatus::Ok);
    let n = unsafe { armreach_report_node_count(r) };
    assert_eq!(n, 5);
    let mut abs = vec![0.0; n];
    let mut rel = vec![0.0; n];
    assert_eq!(unsafe { armreach_report_per_node(r, abs.as_mut_ptr(), rel.as_mut_ptr(), n) }, ArmreachStatus::Ok);
    let total: f64 = abs.iter().sum();
    assert!((total - unsafe { armreach_report_absolute(r) }).abs() < 1e-12);
    assert!(unsafe { armreach_report_relative(r) } >= 0.0);
    assert_eq!(
        unsafe { armreach_report_per_node(r, abs.as_mut_ptr(), ptr::null_mut(), n - 1) },
        ArmreachStatus::BufferTooSmall
    );
    unsafe { armreach_report_free(r) };

    let huge = [1e3, 0.0, 0.0];
    let twists = [0.5, 0.0, 0.0].repeat(5);
    let mut r = ptr::null_mut();
    let status = unsafe { armreach_analyze_twists(d, twists.as_ptr(), twists.len(), huge.as_ptr(), false, 3, &mut r) };
    assert_eq!(status, ArmreachStatus::Ok, "{}", last_error());
    assert!(!unsafe { armreach_report_attainable(r) });
    assert!(unsafe { armreach_report_absolute(r) } > 0.0);
    unsafe { armreach_report_free(r) };

    let status = unsafe { armreach_analyze_twists(d, twists.as_ptr(), 6, huge.as_ptr(), false, 3, &mut r) };
    assert_eq!(status, ArmreachStatus::InvalidArgument);
    assert!(r.is_null());
    assert!(unsafe { armreach_report_absolute(ptr::null()) }.is_nan());
    unsafe { armreach_design_free(d) };
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"armreach.h\"\nint main(void) { ArmreachDesign *d = 0; return armreach_design_builtin(\"antagonistic\", &d) == ARMREACH_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
