//! Experiment batteries: design comparisons, timing benchmarks and shape planning.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arm::{ArmDesign, ArmShape};
use crate::attain::{analyze, AnalysisSettings, Task};
use crate::config::{AnalysisKind, LoadSampling};
use crate::error::{Error, Result};
use crate::io::{csv_table, fmt_f64};
use crate::lie::{Pose, Wrench};
use crate::search::{search_attainability, SearchSettings, ShapeErrorWeights};
use crate::shapes::{tip_candidates, ShapeSpec};
use crate::stats::{median, spearman};

/// Independent uniform draws per component over `±ranges`.
pub fn sample_loads(ranges: [f64; 3], count: usize, seed: u64) -> Vec<Wrench> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut c = [0.0; 3];
            for (v, r) in c.iter_mut().zip(ranges) {
                *v = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
            }
            Wrench::from_array(c)
        })
        .collect()
}

pub fn loads_for(sampling: &LoadSampling, seed: u64) -> Vec<Wrench> {
    match &sampling.explicit {
        Some(list) => list.iter().map(|a| Wrench::from_array(*a)).collect(),
        None => sample_loads(sampling.ranges, sampling.count, seed),
    }
}

/// Label for a task shape: its name when it is a named shape, else `shape<k>`.
pub fn shape_label(spec: &ShapeSpec, index: usize) -> String {
    match spec {
        ShapeSpec::Named { name } => name.clone(),
        _ => format!("shape{}", index + 1),
    }
}

#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub analysis: AnalysisKind,
    pub consistent_shear: bool,
    pub hull: AnalysisSettings,
    pub search: SearchSettings,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub seed: u64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            analysis: AnalysisKind::Hull,
            consistent_shear: true,
            hull: AnalysisSettings::default(),
            search: SearchSettings::default(),
            threads: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub design: usize,
    pub shape: usize,
    pub load: usize,
    pub absolute: f64,
    pub relative: f64,
    /// Search objective; `None` when search was not requested.
    pub s: Option<f64>,
    pub hull_time: Duration,
    pub search_time: Duration,
    pub error: Option<String>,
}

impl Cell {
    pub fn total(&self) -> f64 {
        self.absolute + self.relative
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Per-design, per-shape medians over the cells that completed.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub design: usize,
    pub shape: usize,
    pub completed: usize,
    pub failed: usize,
    pub median_absolute: f64,
    pub median_relative: f64,
    pub median_s: Option<f64>,
    /// Spearman correlation of absolute+relative against `s`.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ComparisonSummary {
    pub designs: Vec<String>,
    pub shapes: Vec<String>,
    pub loads: Vec<Wrench>,
    pub cells: Vec<Cell>,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidTask(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn run_cell(
    design: &ArmDesign,
    shape: &ArmShape,
    load: Wrench,
    opts: &BatteryOptions,
    search_seed: u64,
) -> (f64, f64, Option<f64>, Duration, Duration, Option<String>) {
    let task = if opts.consistent_shear {
        Task::with_consistent_shear(design, shape, load)
    } else {
        Ok(Task::new(shape.clone(), load))
    };
    let task = match task {
        Ok(t) => t,
        Err(e) => return (f64::NAN, f64::NAN, None, Duration::ZERO, Duration::ZERO, Some(e.to_string())),
    };
    let (mut abs, mut rel, mut s) = (f64::NAN, f64::NAN, None);
    let (mut th, mut ts) = (Duration::ZERO, Duration::ZERO);
    let mut err = None;
    if opts.analysis != AnalysisKind::Search {
        let t0 = Instant::now();
        match analyze(design, &task, &opts.hull) {
            Ok(r) => {
                abs = r.absolute_unattainability;
                rel = r.relative_unattainability;
            }
            Err(e) => err = Some(e.to_string()),
        }
        th = t0.elapsed();
    }
    if opts.analysis != AnalysisKind::Hull {
        let settings = SearchSettings { seed: search_seed, ..opts.search };
        let t0 = Instant::now();
        match search_attainability(design, &task, &ShapeErrorWeights::identity(design.segments), &settings) {
            Ok(r) => s = Some(r.s),
            Err(e) => {
                s = Some(f64::INFINITY);
                err.get_or_insert(e.to_string());
            }
        }
        ts = t0.elapsed();
    }
    (abs, rel, s, th, ts, err)
}

/// Runs every `(design, shape, load)` cell. Results are ordered by design,
/// then shape, then load, whatever order the workers finish in.
pub fn run_battery(
    designs: &[ArmDesign],
    shapes: &[(String, ShapeSpec)],
    loads: &[Wrench],
    opts: &BatteryOptions,
) -> Result<ComparisonSummary> {
    let mut built = Vec::with_capacity(designs.len());
    for d in designs {
        d.validate()?;
        let row: Result<Vec<ArmShape>> = shapes
            .iter()
            .map(|(_, s)| s.build(d.segments).map(|b| ArmShape::new(d.base_pose, b.twists().to_vec())))
            .collect();
        built.push(row?);
    }
    let jobs: Vec<(usize, usize, usize)> = (0..designs.len())
        .flat_map(|d| (0..shapes.len()).flat_map(move |s| (0..loads.len()).map(move |l| (d, s, l))))
        .collect();
    let cells = with_pool(opts.threads, || {
        jobs.par_iter()
            .enumerate()
            .map(|(k, &(d, s, l))| {
                let seed = opts.seed.wrapping_add(k as u64);
                let (absolute, relative, sv, hull_time, search_time, error) =
                    run_cell(&designs[d], &built[d][s], loads[l], opts, seed);
                Cell { design: d, shape: s, load: l, absolute, relative, s: sv, hull_time, search_time, error }
            })
            .collect::<Vec<_>>()
    })?;
    Ok(ComparisonSummary {
        designs: designs.iter().map(|d| d.name.clone()).collect(),
        shapes: shapes.iter().map(|(n, _)| n.clone()).collect(),
        loads: loads.to_vec(),
        cells,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl ComparisonSummary {
    pub fn group(&self, design: usize, shape: usize) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.design == design && c.shape == shape)
    }

    pub fn summaries(&self) -> Vec<GroupSummary> {
        let mut out = Vec::new();
        for d in 0..self.designs.len() {
            for s in 0..self.shapes.len() {
                let all: Vec<&Cell> = self.group(d, s).collect();
                let ok: Vec<&Cell> = all.iter().copied().filter(|c| c.ok()).collect();
                let abs: Vec<f64> = ok.iter().map(|c| c.absolute).collect();
                let rel: Vec<f64> = ok.iter().map(|c| c.relative).collect();
                let sv: Vec<f64> = ok.iter().filter_map(|c| c.s).collect();
                let has_s = !sv.is_empty() && sv.len() == ok.len();
                let rho = if has_s && abs.iter().all(|v| v.is_finite()) {
                    let tot: Vec<f64> = ok.iter().map(|c| c.total()).collect();
                    Some(spearman(&tot, &sv))
                } else {
                    None
                };
                out.push(GroupSummary {
                    design: d,
                    shape: s,
                    completed: ok.len(),
                    failed: all.len() - ok.len(),
                    median_absolute: median(&abs),
                    median_relative: median(&rel),
                    median_s: has_s.then(|| median(&sv)),
                    spearman: rho,
                });
            }
        }
        out
    }

    /// One row per cell; no timing so reruns are byte-identical.
    pub fn cells_csv(&self) -> String {
        csv_table(
            &["design", "shape", "load", "fx", "fy", "m", "absolute", "relative", "s", "status"],
            self.cells.iter().map(|c| {
                let q = self.loads[c.load];
                vec![
                    self.designs[c.design].clone(),
                    self.shapes[c.shape].clone(),
                    c.load.to_string(),
                    fmt_f64(q.fx),
                    fmt_f64(q.fy),
                    fmt_f64(q.m),
                    fmt_f64(c.absolute),
                    fmt_f64(c.relative),
                    fmt_opt(c.s),
                    c.error
                        .as_deref()
                        .map(|e| format!("\"error: {}\"", e.replace('"', "'")))
                        .unwrap_or_else(|| "ok".into()),
                ]
            }),
        )
    }

    pub fn medians_csv(&self) -> String {
        csv_table(
            &["design", "shape", "completed", "failed", "median_absolute", "median_relative", "median_s", "spearman"],
            self.summaries().into_iter().map(|g| {
                vec![
                    self.designs[g.design].clone(),
                    self.shapes[g.shape].clone(),
                    g.completed.to_string(),
                    g.failed.to_string(),
                    fmt_f64(g.median_absolute),
                    fmt_f64(g.median_relative),
                    fmt_opt(g.median_s),
                    fmt_opt(g.spearman),
                ]
            }),
        )
    }

    pub fn timing_csv(&self) -> String {
        csv_table(
            &["design", "shape", "load", "hull_seconds", "search_seconds"],
            self.cells.iter().map(|c| {
                vec![
                    self.designs[c.design].clone(),
                    self.shapes[c.shape].clone(),
                    c.load.to_string(),
                    format!("{:.6}", c.hull_time.as_secs_f64()),
                    format!("{:.6}", c.search_time.as_secs_f64()),
                ]
            }),
        )
    }

    pub fn hull_total(&self) -> Duration {
        self.cells.iter().map(|c| c.hull_time).sum()
    }

    pub fn search_total(&self) -> Duration {
        self.cells.iter().map(|c| c.search_time).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "designs = {}", self.designs.join(", "));
        let _ = writeln!(s, "shapes = {}", self.shapes.join(", "));
        let _ = writeln!(s, "loads = {}", self.loads.len());
        let _ = writeln!(s, "cells = {}", self.cells.len());
        for g in self.summaries() {
            let _ = write!(
                s,
                "{} / {}: completed {} failed {} median absolute {:.6} median relative {:.6}",
                self.designs[g.design],
                self.shapes[g.shape],
                g.completed,
                g.failed,
                g.median_absolute,
                g.median_relative
            );
            if let Some(m) = g.median_s {
                let _ = write!(s, " median s {m:.6e}");
            }
            if let Some(r) = g.spearman {
                let _ = write!(s, " spearman {r:.4}");
            }
            s.push('\n');
        }
        s
    }
}

/// Timing totals of a benchmark battery.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub summary: ComparisonSummary,
    pub hull_total: Duration,
    pub search_total: Duration,
}

impl BenchReport {
    /// Search time over hull time; `None` for an empty battery.
    pub fn speedup(&self) -> Option<f64> {
        let h = self.hull_total.as_secs_f64();
        (h > 0.0).then(|| self.search_total.as_secs_f64() / h)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cells = {}", self.summary.cells.len());
        let _ = writeln!(s, "hull_seconds = {:.6}", self.hull_total.as_secs_f64());
        let _ = writeln!(s, "search_seconds = {:.6}", self.search_total.as_secs_f64());
        match self.speedup() {
            Some(r) => {
                let _ = writeln!(s, "speedup = {r:.3}");
            }
            None => s.push_str("speedup = n/a\n"),
        }
        s
    }
}

/// Runs hull analysis and search on every cell, one cell at a time with a
/// single-threaded search so the per-task times are comparable.
pub fn bench(
    designs: &[ArmDesign],
    shapes: &[(String, ShapeSpec)],
    loads: &[Wrench],
    opts: &BatteryOptions,
) -> Result<BenchReport> {
    let opts = BatteryOptions {
        analysis: AnalysisKind::Both,
        threads: Some(1),
        search: SearchSettings { parallel: false, ..opts.search },
        ..opts.clone()
    };
    let summary = run_battery(designs, shapes, loads, &opts)?;
    Ok(BenchReport { hull_total: summary.hull_total(), search_total: summary.search_total(), summary })
}

#[derive(Debug, Clone)]
pub struct ShapePlanOptions {
    pub load: Wrench,
    pub consistent_shear: bool,
    pub hull: AnalysisSettings,
    /// Verify every candidate with search when set.
    pub search: Option<SearchSettings>,
    pub tip_tolerance: f64,
}

impl Default for ShapePlanOptions {
    fn default() -> Self {
        Self {
            load: Wrench::new(7.0, 0.0, 0.0),
            consistent_shear: true,
            hull: AnalysisSettings::default(),
            search: None,
            tip_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanCandidate {
    pub index: usize,
    pub shape: ArmShape,
    pub absolute: f64,
    pub relative: f64,
    pub s: Option<f64>,
    /// 1-based ranks.
    pub absolute_rank: usize,
    pub relative_rank: usize,
    pub rank: usize,
}

impl PlanCandidate {
    pub fn rankings_disagree(&self) -> bool {
        self.absolute_rank != self.relative_rank
    }
}

#[derive(Debug, Clone)]
pub struct ShapePlan {
    pub tip: Pose,
    pub load: Wrench,
    /// In input order.
    pub candidates: Vec<PlanCandidate>,
}

fn ranks_by(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut r = vec![0; values.len()];
    for (k, i) in idx.into_iter().enumerate() {
        r[i] = k + 1;
    }
    r
}

/// Default candidate family: two-arc shapes meeting `tip`.
pub fn plan_candidates(segments: usize, tip: &Pose) -> Vec<ArmShape> {
    tip_candidates(segments, tip, 3, 0.5)
}

/// Ranks tip-equivalent candidates by (absolute, relative) unattainability.
pub fn shape_plan(
    design: &ArmDesign,
    tip: &Pose,
    candidates: &[ArmShape],
    opts: &ShapePlanOptions,
) -> Result<ShapePlan> {
    if candidates.is_empty() {
        return Err(Error::InvalidTask("shape plan needs at least one candidate".into()));
    }
    for (k, c) in candidates.iter().enumerate() {
        let e = c.tip();
        let d = [e.x - tip.x, e.y - tip.y, crate::lie::wrap_angle(e.theta - tip.theta)];
        if d.iter().any(|v| !(v.abs() <= opts.tip_tolerance)) {
            return Err(Error::InvalidTask(format!(
                "candidate {k} ends at ({:.6}, {:.6}, {:.6}), not at the tip pose ({:.6}, {:.6}, {:.6})",
                e.x, e.y, e.theta, tip.x, tip.y, tip.theta
            )));
        }
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for (k, c) in candidates.iter().enumerate() {
        let task = if opts.consistent_shear {
            Task::with_consistent_shear(design, c, opts.load)?
        } else {
            Task::new(c.clone(), opts.load)
        };
        let r = analyze(design, &task, &opts.hull)?;
        let s = match &opts.search {
            Some(settings) => {
                let w = ShapeErrorWeights::identity(design.segments);
                let settings = SearchSettings { seed: settings.seed.wrapping_add(k as u64), ..*settings };
                Some(search_attainability(design, &task, &w, &settings).map(|r| r.s).unwrap_or(f64::INFINITY))
            }
            None => None,
        };
        rows.push((task.shape, r.absolute_unattainability, r.relative_unattainability, s));
    }
    let abs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let rel: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ra = ranks_by(&abs);
    let rr = ranks_by(&rel);
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]).then(rel[a].total_cmp(&rel[b])).then(a.cmp(&b)));
    let mut rank = vec![0; rows.len()];
    for (k, i) in idx.into_iter().enumerate() {
        rank[i] = k + 1;
    }
    let candidates = rows
        .into_iter()
        .enumerate()
        .map(|(k, (shape, absolute, relative, s))| PlanCandidate {
            index: k,
            shape,
            absolute,
            relative,
            s,
            absolute_rank: ra[k],
            relative_rank: rr[k],
            rank: rank[k],
        })
        .collect();
    Ok(ShapePlan { tip: *tip, load: opts.load, candidates })
}

impl ShapePlan {
    pub fn ranked(&self) -> Vec<&PlanCandidate> {
        let mut v: Vec<&PlanCandidate> = self.candidates.iter().collect();
        v.sort_by_key(|c| c.rank);
        v
    }

    pub fn to_csv(&self) -> String {
        csv_table(
            &["candidate", "rank", "absolute", "relative", "absolute_rank", "relative_rank", "disagree", "s"],
            self.ranked().into_iter().map(|c| {
                vec![
                    c.index.to_string(),
                    c.rank.to_string(),
                    fmt_f64(c.absolute),
                    fmt_f64(c.relative),
                    c.absolute_rank.to_string(),
                    c.relative_rank.to_string(),
                    c.rankings_disagree().to_string(),
                    fmt_opt(c.s),
                ]
            }),
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tip = ({:.6}, {:.6}, {:.6})", self.tip.x, self.tip.y, self.tip.theta);
        let _ = writeln!(s, "load = ({}, {}, {})", self.load.fx, self.load.fy, self.load.m);
        let _ = writeln!(s, "candidates = {}", self.candidates.len());
        for c in self.ranked() {
            let _ = write!(
                s,
                "rank {}: candidate {} absolute {:.6e} (rank {}) relative {:.6e} (rank {})",
                c.rank, c.index, c.absolute, c.absolute_rank, c.relative, c.relative_rank
            );
            if let Some(v) = c.s {
                let _ = write!(s, " s {v:.6e}");
            }
            if c.rankings_disagree() {
                s.push_str(" [absolute and relative rankings disagree]");
            }
            s.push('\n');
        }
        s
    }
}
