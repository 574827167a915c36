use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use armreach::arm::{actuator_strains, residual, ArmDesign, ArmShape};
use armreach::attain::{analyze, hulls_csv, sequence_csv, AnalysisSettings, Task};
use armreach::config::{load_design, load_task, ExperimentSpec};
use armreach::harness::{self, BatteryOptions, ComparisonSummary, ShapePlanOptions};
use armreach::io::{csv_table, fmt_f64};
use armreach::lie::{Pose, Wrench};
use armreach::search::SearchSettings;
use armreach::shapes::ShapeSpec;
use armreach::statics::{continuation_solve, solve_equilibrium, SolveSettings};
use armreach::svg::{histogram_svg, hull_projection_svg, shapes_svg, PALETTE};
use armreach::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_UNATTAINABLE: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "armreach", version, about = "Statics and wrench-hull attainability for planar soft arms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for every random draw (overrides the experiment file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Samples per pressure-box edge for hull construction.
    #[arg(long, global = true)]
    per_edge: Option<usize>,
    /// Equilibrium residual tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for report.txt, CSV and SVG output.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium shape at given pressures and tip load.
    Solve {
        /// Design file or builtin name.
        #[arg(long)]
        design: String,
        /// Comma-separated pressures in Pa, one per actuator.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pressures: Vec<f64>,
        /// World-frame tip load `fx,fy,m`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0")]
        load: Vec<f64>,
        /// Ramp pressures and load in this many steps if the direct solve fails.
        #[arg(long, default_value_t = 10)]
        continuation: usize,
    },
    /// Wrench-hull attainability of a task.
    Analyze {
        #[arg(long)]
        design: String,
        /// Task file; otherwise `--shape` and `--load` describe the task.
        #[arg(long)]
        task: Option<String>,
        /// Named task shape.
        #[arg(long, conflicts_with = "task")]
        shape: Option<String>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0,0,0",
            conflicts_with = "task"
        )]
        load: Vec<f64>,
        /// Keep the shape's shear as given instead of matching it to the load.
        #[arg(long, conflicts_with = "task")]
        raw_shear: bool,
        /// Print per-node distances.
        #[arg(long)]
        per_node: bool,
        /// Also run the search baseline.
        #[arg(long)]
        search: bool,
    },
    /// Run an experiment battery and summarise per design and shape.
    Compare { experiment: String },
    /// Time hull analysis against search on an experiment battery.
    Bench { experiment: String },
    /// Rank tip-equivalent shapes by attainability.
    ShapePlan {
        #[arg(long)]
        design: String,
        /// Tip pose `x,y,theta`; defaults to the tip of `--reference`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tip: Option<Vec<f64>>,
        /// Named shape whose tip is the target.
        #[arg(long, default_value = "reach")]
        reference: String,
        /// TOML file with `[[candidates]]` shape entries; otherwise two-arc candidates are generated.
        #[arg(long)]
        candidates: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "7,0,0")]
        load: Vec<f64>,
        /// Verify the ranking with the search baseline.
        #[arg(long)]
        search: bool,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::PressureOutOfRange { .. }
                | Error::Config { .. }
                | Error::InvalidDesign(_)
                | Error::InvalidTask(_)
                | Error::DimensionMismatch(_)
                | Error::InvalidGrid(_) => EXIT_INVALID,
                Error::NotConverged { .. } | Error::ContinuationFailed { .. } => EXIT_NOT_CONVERGED,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    if let Some(0) = g.threads {
        bail!(Error::InvalidTask("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::Solve { design, pressures, load, continuation } => {
            cmd_solve(g, design, pressures, load, *continuation)
        }
        Command::Analyze { design, task, shape, load, raw_shear, per_node, search } => {
            cmd_analyze(g, design, task.as_deref(), shape.as_deref(), load, *raw_shear, *per_node, *search)
        }
        Command::Compare { experiment } => cmd_compare(g, experiment, false),
        Command::Bench { experiment } => cmd_compare(g, experiment, true),
        Command::ShapePlan { design, tip, reference, candidates, load, search } => {
            cmd_shape_plan(g, design, tip.as_deref(), reference, candidates.as_deref(), load, *search)
        }
    }
}

fn wrench_arg(v: &[f64], what: &str) -> anyhow::Result<Wrench> {
    match v {
        [fx, fy, m] if v.iter().all(|x| x.is_finite()) => Ok(Wrench::new(*fx, *fy, *m)),
        _ => bail!(Error::InvalidTask(format!("{what} needs three finite values fx,fy,m"))),
    }
}

fn solve_settings(g: &Global) -> anyhow::Result<SolveSettings> {
    let mut s = SolveSettings::default();
    if let Some(t) = g.tolerance {
        s.tolerance = t;
    }
    s.validate()?;
    Ok(s)
}

fn hull_settings(g: &Global, base: AnalysisSettings) -> AnalysisSettings {
    AnalysisSettings { per_edge: g.per_edge.unwrap_or(base.per_edge), ..base }
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn prepare(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn poses_csv(shape: &ArmShape) -> String {
    csv_table(
        &["node", "x", "y", "theta"],
        shape
            .poses()
            .iter()
            .enumerate()
            .map(|(i, p)| vec![i.to_string(), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.theta)]),
    )
}

fn cmd_solve(g: &Global, design: &str, pressures: &[f64], load: &[f64], continuation: usize) -> anyhow::Result<u8> {
    let design = load_design(design)?;
    let q = wrench_arg(load, "--load")?;
    if pressures.len() != design.actuator_count() {
        bail!(Error::DimensionMismatch(format!(
            "{} pressures given for {} actuators",
            pressures.len(),
            design.actuator_count()
        )));
    }
    design.check_pressures(pressures)?;
    let settings = solve_settings(g)?;
    let mut result = solve_equilibrium(&design, pressures, &q, None, &settings)?;
    if !result.converged && continuation > 0 {
        info!("direct solve stalled at {:e}; trying continuation", result.residual_norm);
        if let Ok(r) = continuation_solve(&design, pressures, &q, continuation, &settings) {
            if r.residual_norm < result.residual_norm {
                result = r;
            }
        }
    }
    let check = residual(&design, &result.shape, pressures, &q).iter().map(Wrench::norm).fold(0.0, f64::max);

    let mut report = String::new();
    report.push_str(&format!("design = {}\n", design.name));
    report.push_str(&format!("converged = {}\n", result.converged));
    report.push_str(&format!("residual_norm = {}\n", fmt_f64(check)));
    report.push_str(&format!("iterations = {}\n", result.iterations));
    report.push_str(&format!("clamp_warnings = {}\n", result.clamp_warnings));
    for (i, p) in result.shape.poses().iter().enumerate() {
        report.push_str(&format!("pose {i}: x = {} y = {} theta = {}\n", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.theta)));
    }
    let strains: Vec<Vec<f64>> = (0..design.segments).map(|i| actuator_strains(&design, &result.shape, i)).collect();
    for (i, s) in strains.iter().enumerate() {
        let v: Vec<String> = s.iter().map(|x| fmt_f64(*x)).collect();
        report.push_str(&format!("strains {i}: [{}]\n", v.join(", ")));
    }
    print!("{report}");
    if let Some(dir) = &g.output_dir {
        prepare(dir)?;
        write(dir, "report.txt", &report)?;
        write(dir, "poses.csv", &poses_csv(&result.shape))?;
        let mut header = vec!["segment".to_string()];
        header.extend((0..design.actuator_count()).map(|k| format!("actuator{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write(
            dir,
            "strains.csv",
            &csv_table(
                &header,
                strains
                    .iter()
                    .enumerate()
                    .map(|(i, s)| std::iter::once(i.to_string()).chain(s.iter().map(|x| fmt_f64(*x))).collect()),
            ),
        )?;
        write(dir, "shape.svg", &shapes_svg(&format!("{} equilibrium", design.name), &[(&result.shape, PALETTE[0])]))?;
    }
    if !result.converged {
        eprintln!("error: equilibrium did not converge (residual {:e})", result.residual_norm);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn task_from_args(
    design: &ArmDesign,
    task: Option<&str>,
    shape: Option<&str>,
    load: &[f64],
    raw_shear: bool,
) -> anyhow::Result<Task> {
    if let Some(path) = task {
        return Ok(load_task(path, design)?);
    }
    let Some(name) = shape else {
        bail!(Error::InvalidTask("give --task or --shape".into()));
    };
    let q = wrench_arg(load, "--load")?;
    let built = ShapeSpec::Named { name: name.into() }.build(design.segments)?;
    let built = ArmShape::new(design.base_pose, built.twists().to_vec());
    Ok(if raw_shear { Task::new(built, q) } else { Task::with_consistent_shear(design, &built, q)? })
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    g: &Global,
    design: &str,
    task: Option<&str>,
    shape: Option<&str>,
    load: &[f64],
    raw_shear: bool,
    per_node: bool,
    search: bool,
) -> anyhow::Result<u8> {
    let design = load_design(design)?;
    let task = task_from_args(&design, task, shape, load, raw_shear)?;
    let settings =
        AnalysisSettings { keep_hulls: g.output_dir.is_some(), ..hull_settings(g, AnalysisSettings::default()) };
    let report = analyze(&design, &task, &settings)?;
    let mut text = format!("design = {}\n", design.name);
    if per_node {
        text.push_str(&report.to_text());
    } else {
        text.push_str(
            &report.to_text().lines().filter(|l| !l.starts_with("node ")).map(|l| format!("{l}\n")).collect::<String>(),
        );
    }
    if search {
        let settings =
            SearchSettings { seed: g.seed.unwrap_or(0), solve: solve_settings(g)?, ..SearchSettings::default() };
        let w = armreach::search::ShapeErrorWeights::identity(design.segments);
        let r = armreach::search::search_attainability(&design, &task, &w, &settings)?;
        text.push_str(&format!("search_s = {}\n", fmt_f64(r.s)));
        let p: Vec<String> = r.pressures.iter().map(|v| fmt_f64(*v)).collect();
        text.push_str(&format!("search_pressures = [{}]\n", p.join(", ")));
    }
    print!("{text}");
    if let Some(dir) = &g.output_dir {
        prepare(dir)?;
        write(dir, "report.txt", &text)?;
        write(dir, "per_node.csv", &report.per_node_csv())?;
        write(dir, "requirement.csv", &sequence_csv(&report.requirement))?;
        write(dir, "task_poses.csv", &poses_csv(&task.shape))?;
        if let Some(h) = &report.hulls {
            write(dir, "hulls_absolute.csv", &hulls_csv(&h.absolute))?;
            write(dir, "hulls_relative.csv", &hulls_csv(&h.relative))?;
            for (i, (hull, w)) in h.absolute.iter().zip(&report.requirement).enumerate() {
                write(
                    dir,
                    &format!("hull_node{i}.svg"),
                    &hull_projection_svg(
                        &format!("node {i}: fx against m"),
                        &[(hull, PALETTE[0])],
                        &[w.as_array()],
                        (0, 2),
                    ),
                )?;
            }
        }
        write(dir, "task.svg", &shapes_svg("task shape", &[(&task.shape, PALETTE[0])]))?;
    }
    Ok(if report.attainable { 0 } else { EXIT_UNATTAINABLE })
}

struct Experiment {
    spec: ExperimentSpec,
    designs: Vec<ArmDesign>,
    shapes: Vec<(String, ShapeSpec)>,
    loads: Vec<Wrench>,
    opts: BatteryOptions,
    out: PathBuf,
}

fn experiment_inputs(g: &Global, path: &str) -> anyhow::Result<Experiment> {
    let spec = ExperimentSpec::load(path)?;
    let base = Path::new(path).parent().unwrap_or(Path::new("."));
    let designs = spec.resolve_designs(base)?;
    let shapes: Vec<(String, ShapeSpec)> =
        spec.task_shapes.iter().enumerate().map(|(k, s)| (harness::shape_label(s, k), s.clone())).collect();
    let seed = g.seed.unwrap_or(spec.seed);
    let loads = harness::loads_for(&spec.loads, seed);
    let mut search = spec.search;
    if let Some(t) = g.tolerance {
        search.solve.tolerance = t;
    }
    search.solve.validate()?;
    let opts = BatteryOptions {
        analysis: spec.analysis,
        consistent_shear: spec.consistent_shear,
        hull: hull_settings(g, spec.hull),
        search,
        threads: g.threads,
        seed,
    };
    let out = g
        .output_dir
        .clone()
        .or_else(|| spec.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
    Ok(Experiment { spec, designs, shapes, loads, opts, out })
}

fn write_figures(
    dir: &Path,
    designs: &[ArmDesign],
    shapes: &[(String, ShapeSpec)],
    summary: &ComparisonSummary,
) -> anyhow::Result<()> {
    let segments = designs.first().map(|d| d.segments).unwrap_or(1);
    let built: Vec<ArmShape> = shapes.iter().map(|(_, s)| s.build(segments)).collect::<Result<_, _>>()?;
    let refs: Vec<(&ArmShape, &str)> = built.iter().enumerate().map(|(k, s)| (s, PALETTE[k % PALETTE.len()])).collect();
    write(dir, "shapes.svg", &shapes_svg("task shapes", &refs))?;
    for (s, (label, _)) in shapes.iter().enumerate() {
        let series: Vec<(String, Vec<f64>)> = designs
            .iter()
            .enumerate()
            .map(|(d, design)| {
                (design.name.clone(), summary.group(d, s).filter(|c| c.ok()).map(|c| c.absolute).collect())
            })
            .collect();
        let refs: Vec<(&str, &[f64], &str)> = series
            .iter()
            .enumerate()
            .map(|(k, (n, v))| (n.as_str(), v.as_slice(), PALETTE[k % PALETTE.len()]))
            .collect();
        write(
            dir,
            &format!("absolute_{label}.svg"),
            &histogram_svg(&format!("absolute unattainability, {label}"), &refs, 20),
        )?;
    }
    Ok(())
}

fn cmd_compare(g: &Global, path: &str, bench: bool) -> anyhow::Result<u8> {
    let Experiment { spec, designs, shapes, loads, opts, out } = experiment_inputs(g, path)?;
    info!("{}: {} designs, {} shapes, {} loads", spec.name, designs.len(), shapes.len(), loads.len());
    prepare(&out)?;
    let loads_csv = csv_table(
        &["load", "fx", "fy", "m"],
        loads.iter().enumerate().map(|(i, w)| vec![i.to_string(), fmt_f64(w.fx), fmt_f64(w.fy), fmt_f64(w.m)]),
    );
    write(&out, "loads.csv", &loads_csv)?;
    let (summary, text) = if bench {
        let r = harness::bench(&designs, &shapes, &loads, &opts)?;
        write(&out, "timing.csv", &r.summary.timing_csv())?;
        let text = format!("experiment = {}\n{}{}", spec.name, r.summary.to_text(), r.to_text());
        (r.summary, text)
    } else {
        let s = harness::run_battery(&designs, &shapes, &loads, &opts)?;
        let text = format!("experiment = {}\n{}", spec.name, s.to_text());
        (s, text)
    };
    write(&out, "cells.csv", &summary.cells_csv())?;
    write(&out, "medians.csv", &summary.medians_csv())?;
    write(&out, "report.txt", &text)?;
    write_figures(&out, &designs, &shapes, &summary)?;
    print!("{text}");
    println!("output = {}", out.display());
    Ok(0)
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    candidates: Vec<ShapeSpec>,
}

fn cmd_shape_plan(
    g: &Global,
    design: &str,
    tip: Option<&[f64]>,
    reference: &str,
    candidates: Option<&str>,
    load: &[f64],
    search: bool,
) -> anyhow::Result<u8> {
    let design = load_design(design)?;
    let q = wrench_arg(load, "--load")?;
    let rebase = |s: ArmShape| ArmShape::new(design.base_pose, s.twists().to_vec());
    let tip = match tip {
        Some([x, y, t]) => Pose::new(*x, *y, *t),
        Some(_) => bail!(Error::InvalidTask("--tip needs x,y,theta".into())),
        None => rebase(ShapeSpec::Named { name: reference.into() }.build(design.segments)?).tip(),
    };
    let cands: Vec<ArmShape> = match candidates {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let f: CandidateFile =
                toml::from_str(&text).map_err(|e| Error::Config { path: path.into(), message: e.to_string() })?;
            f.candidates.iter().map(|s| s.build(design.segments).map(rebase)).collect::<Result<_, _>>()?
        }
        None => harness::plan_candidates(design.segments, &tip.compose(&design.base_pose.inverse()))
            .into_iter()
            .map(rebase)
            .collect(),
    };
    let opts = ShapePlanOptions {
        load: q,
        hull: hull_settings(g, AnalysisSettings::default()),
        search: search.then(|| SearchSettings { seed: g.seed.unwrap_or(0), ..SearchSettings::default() }),
        ..ShapePlanOptions::default()
    };
    let plan = harness::shape_plan(&design, &tip, &cands, &opts)?;
    let text = format!("design = {}\n{}", design.name, plan.to_text());
    print!("{text}");
    if let Some(dir) = &g.output_dir {
        prepare(dir)?;
        write(dir, "report.txt", &text)?;
        write(dir, "plan.csv", &plan.to_csv())?;
        let refs: Vec<(&ArmShape, &str)> =
            plan.candidates.iter().map(|c| (&c.shape, PALETTE[(c.rank - 1).min(PALETTE.len() - 1)])).collect();
        write(dir, "candidates.svg", &shapes_svg("candidate shapes", &refs))?;
    }
    Ok(0)
}
