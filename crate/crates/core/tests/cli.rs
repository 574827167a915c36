use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_armreach"))
}

fn experiments() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_zero_input_is_straight() {
    let o = run(&["solve", "--design", "antagonistic", "--pressures", "0,0,0,0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("converged = true"));
    assert!(text.lines().filter(|l| l.starts_with("pose ")).all(|l| l.ends_with("theta = 0")), "{text}");
}

#[test]
fn solve_rejects_out_of_range_pressure() {
    let o = run(&["solve", "--design", "antagonistic", "--pressures", "1e9,0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside"));
    let o = run(&["solve", "--design", "antagonistic", "--pressures", "-5,0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_reports_non_convergence() {
    let o = run(&[
        "--tolerance",
        "1e-30",
        "solve",
        "--design",
        "bellows_only",
        "--pressures",
        "40000,0",
        "--load",
        "5,5,0.5",
        "--continuation",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = exe()
        .args(["--output-dir"])
        .arg(dir.path())
        .args(["solve", "--design", "antagonistic", "--pressures", "20000,0,0,10000", "--load", "1,0,0"])
        .output()
        .unwrap();
    assert!(o.status.success());
    for f in ["report.txt", "poses.csv", "strains.csv", "shape.svg"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let poses = std::fs::read_to_string(dir.path().join("poses.csv")).unwrap();
    assert_eq!(poses.lines().count(), 7);
}

#[test]
fn config_errors_name_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "name = \"bad\"\nsegments = 5\n\n[[actuators]]\nkind = \"bellows\"\noffset = 0.02\nneutral_length = 0.0\n\n[[actuators]]\nkind = \"bellows\"\noffset = -0.02\nneutral_length = 0.5\n").unwrap();
    let o = exe().args(["solve", "--pressures", "0,0", "--design"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 7") && err.contains("actuators[0].neutral_length"), "{err}");
}

#[test]
fn analyze_exit_codes() {
    let o = run(&["analyze", "--design", "antagonistic", "--shape", "reach", "--load", "1000,0,0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("attainable = false"));

    let task = experiments().join("tip_task.toml");
    let o = exe().args(["analyze", "--design", "antagonistic", "--per-node", "--task"]).arg(&task).output().unwrap();
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let text = stdout(&o);
    let nodes: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("node "))
        .map(|l| l.split("absolute = ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(nodes.len(), 5);
    let total: f64 = text
        .lines()
        .find(|l| l.starts_with("absolute_unattainability"))
        .unwrap()
        .split(" = ")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((nodes.iter().sum::<f64>() - total).abs() <= 1e-12 * (1.0 + total));
}

#[test]
fn analyze_dumps_hulls() {
    let dir = tempfile::tempdir().unwrap();
    let o = exe()
        .args(["--per-edge", "3", "--output-dir"])
        .arg(dir.path())
        .args(["analyze", "--design", "bellows_only", "--shape", "s_curve", "--load", "0,0,0"])
        .output()
        .unwrap();
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let text = std::fs::read_to_string(dir.path().join("hulls_absolute.csv")).unwrap();
    let hulls = armreach::attain::read_hull_vertices(&text).unwrap();
    assert_eq!(hulls.len(), 5);
    assert!(dir.path().join("hull_node0.svg").is_file());
}

#[test]
fn compare_and_bench_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = experiments().join("smoke.toml");
    let o = exe()
        .args(["--threads", "2", "--output-dir"])
        .arg(dir.path().join("c"))
        .arg("compare")
        .arg(&spec)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.txt", "cells.csv", "medians.csv", "loads.csv", "shapes.svg", "absolute_shape1.svg"] {
        assert!(dir.path().join("c").join(f).is_file(), "{f}");
    }
    let o = exe().args(["--output-dir"]).arg(dir.path().join("b")).arg("bench").arg(&spec).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("speedup = "));
    let timing = std::fs::read_to_string(dir.path().join("b/timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 7);
    let a = std::fs::read(dir.path().join("c/cells.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/cells.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn shape_plan_reports_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        exe().args(["--output-dir"]).arg(dir.path()).args(["shape-plan", "--design", "antagonistic"]).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("rank 1:"));
    assert!(dir.path().join("plan.csv").is_file());

    let cands = dir.path().join("cands.toml");
    std::fs::write(&cands, "[[candidates]]\nkind = \"constant_curvature\"\nlength = 0.5\ncurvature = 1.0\n").unwrap();
    let o = exe()
        .args(["shape-plan", "--design", "antagonistic", "--tip", "0.4,0.2,1.0", "--candidates"])
        .arg(&cands)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tip pose"));
}
