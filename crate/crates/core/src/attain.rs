//! Wrench-hull attainability analysis.
//!
//! A task (shape plus tip load) fixes the wrench every node must supply. With
//! the shape frozen, each node's reaction is a function of pressure only, so
//! the set of wrenches an arm can produce at a node is the image of the
//! pressure box. Hulls of edge samples of the box bound these images, and the
//! distances from the required wrenches to the hulls measure how far the task
//! is from attainable. Nothing here solves for equilibrium.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Beta;
use serde::{Deserialize, Serialize};

use crate::arm::{load_wrench_sequence, reaction_wrench, ArmDesign, ArmShape};
use crate::error::{Error, Result};
use crate::hull::WrenchHull;
use crate::io::{csv_table, fmt_f64};
use crate::lie::{Twist, Wrench};

/// One wrench per node.
pub type WrenchSequence = Vec<Wrench>;

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub shape: ArmShape,
    /// World-frame tip load.
    pub tip_load: Wrench,
}

impl Task {
    pub fn new(shape: ArmShape, tip_load: Wrench) -> Self {
        Self { shape, tip_load }
    }

    /// Task whose shear matches what `design` would carry under the load.
    ///
    /// Shear reactions do not depend on pressure, so a task shape with
    /// arbitrary shear is unattainable by a fixed margin. Lengths and
    /// curvatures are kept; each segment's shear is set so the shear
    /// stiffness balances the lateral load at its node.
    pub fn with_consistent_shear(design: &ArmDesign, shape: &ArmShape, tip_load: Wrench) -> Result<Self> {
        design.check_shape(shape)?;
        let stiffness = design.shear_penalty * design.actuator_count() as f64;
        let mut current = shape.clone();
        for _ in 0..20 {
            let loads = load_wrench_sequence(&current, &tip_load);
            let twists: Vec<Twist> =
                current.twists().iter().zip(&loads).map(|(t, q)| Twist::new(t.l, q.fy / stiffness, t.kappa)).collect();
            let next = current.with_twists(twists);
            let change =
                next.twists().iter().zip(current.twists()).map(|(a, b)| (a.gamma - b.gamma).abs()).fold(0.0, f64::max);
            current = next;
            if change <= 1e-15 {
                break;
            }
        }
        Ok(Self::new(current, tip_load))
    }

    pub fn validate(&self, design: &ArmDesign) -> Result<()> {
        design.check_shape(&self.shape)?;
        if !self.tip_load.is_finite() {
            return Err(Error::InvalidTask("tip load is not finite".into()));
        }
        if !self.shape.twists().iter().all(Twist::is_finite) {
            return Err(Error::InvalidTask("task shape has non-finite twists".into()));
        }
        Ok(())
    }
}

/// Axis-aligned pressure box `[0, upper_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSpace {
    upper: Vec<f64>,
}

impl PressureSpace {
    pub fn new(upper: Vec<f64>) -> Result<Self> {
        if upper.is_empty() {
            return Err(Error::InvalidDesign("pressure space has no actuators".into()));
        }
        if let Some(k) = upper.iter().position(|u| !(u.is_finite() && *u > 0.0)) {
            return Err(Error::InvalidDesign(format!("actuator {k} has non-positive maximum pressure {}", upper[k])));
        }
        Ok(Self { upper })
    }

    pub fn of_design(design: &ArmDesign) -> Self {
        Self::new(design.max_pressures()).expect("validated design has positive maximum pressures")
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.upper.len() && p.iter().zip(&self.upper).all(|(v, u)| (0.0..=*u).contains(v))
    }

    /// Maps `[0,1]^M` onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.upper).map(|(v, hi)| v.clamp(0.0, 1.0) * hi).collect()
    }

    pub fn to_unit(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.upper).map(|(v, hi)| v / hi).collect()
    }
}

/// Wrenches the task must be met with: the negated load sequence.
pub fn requirement_wrench_sequence(task: &Task) -> WrenchSequence {
    load_wrench_sequence(&task.shape, &task.tip_load).into_iter().map(|q| -q).collect()
}

/// Reactions at the given (frozen) shape for pressure `p`.
pub fn attainable_wrench_sequence(design: &ArmDesign, shape: &ArmShape, pressures: &[f64]) -> WrenchSequence {
    (0..shape.segments()).map(|i| reaction_wrench(design, shape, pressures, i)).collect()
}

/// Differences from the first node's wrench.
pub fn relative_sequence(seq: &[Wrench]) -> WrenchSequence {
    match seq.first() {
        Some(&w0) => seq.iter().map(|w| *w - w0).collect(),
        None => Vec::new(),
    }
}

/// Evenly spaced points on every edge of the pressure box, corners shared.
pub fn sample_pressure_edges(space: &PressureSpace, per_edge: usize) -> Result<Vec<Vec<f64>>> {
    if per_edge < 2 {
        return Err(Error::InvalidDesign(format!("per_edge must be at least 2, got {per_edge}")));
    }
    let m = space.dim();
    let last = per_edge - 1;
    let mut grid: BTreeSet<Vec<usize>> = BTreeSet::new();
    for axis in 0..m {
        for corner in 0..(1usize << (m - 1)) {
            for t in 0..per_edge {
                let mut bit = 0;
                let idx: Vec<usize> = (0..m)
                    .map(|k| {
                        if k == axis {
                            t
                        } else {
                            let b = (corner >> bit) & 1;
                            bit += 1;
                            b * last
                        }
                    })
                    .collect();
                grid.insert(idx);
            }
        }
    }
    Ok(grid
        .into_iter()
        .map(|idx| idx.iter().zip(space.upper()).map(|(&k, hi)| hi * k as f64 / last as f64).collect())
        .collect())
}

/// Independent scaled Beta draws per coordinate.
pub fn sample_pressure_interior_beta(
    space: &PressureSpace,
    count: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidDesign("interior sample count must be positive".into()));
    }
    let dist = Beta::new(alpha, beta).map_err(|e| Error::InvalidDesign(format!("beta({alpha}, {beta}): {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| space.upper().iter().map(|hi| rng.sample(dist) * hi).collect()).collect())
}

fn node_points(design: &ArmDesign, shape: &ArmShape, samples: &[Vec<f64>], relative: bool) -> Result<Vec<Vec<Wrench>>> {
    design.check_shape(shape)?;
    for p in samples {
        design.check_pressures(p)?;
    }
    let mut per_node = vec![Vec::with_capacity(samples.len()); shape.segments()];
    for p in samples {
        let seq = attainable_wrench_sequence(design, shape, p);
        let seq = if relative { relative_sequence(&seq) } else { seq };
        for (node, w) in seq.into_iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::DegenerateHull { node, reason: "non-finite reaction wrench".into() });
            }
            per_node[node].push(w);
        }
    }
    Ok(per_node)
}

/// Hull of `a_i(p)` over the samples, for every node.
pub fn build_absolute_hulls(design: &ArmDesign, shape: &ArmShape, samples: &[Vec<f64>]) -> Result<Vec<WrenchHull>> {
    node_points(design, shape, samples, false)?
        .into_iter()
        .enumerate()
        .map(|(node, pts)| match WrenchHull::build(&pts) {
            None => Err(Error::DegenerateHull { node, reason: "no pressure samples".into() }),
            Some(h) if h.degenerate_rank() == 0 => {
                Err(Error::DegenerateHull { node, reason: "all pressures give the same wrench".into() })
            }
            Some(h) => Ok(h),
        })
        .collect()
}

/// Hull of `a_i(p) - a_0(p)` over the samples, for every node.
pub fn build_relative_hulls(design: &ArmDesign, shape: &ArmShape, samples: &[Vec<f64>]) -> Result<Vec<WrenchHull>> {
    node_points(design, shape, samples, true)?
        .into_iter()
        .enumerate()
        .map(|(node, pts)| {
            WrenchHull::build(&pts).ok_or(Error::DegenerateHull { node, reason: "no pressure samples".into() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub per_edge: usize,
    /// Verdict threshold on each summed metric; `None` means `1e-6 * N`.
    pub epsilon: Option<f64>,
    /// Diagonal weights on `(fx, fy, m)` in the distance.
    pub weights: [f64; 3],
    pub keep_hulls: bool,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self { per_edge: 5, epsilon: None, weights: [1.0; 3], keep_hulls: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hulls {
    pub absolute: Vec<WrenchHull>,
    pub relative: Vec<WrenchHull>,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttainabilityReport {
    pub absolute_unattainability: f64,
    pub relative_unattainability: f64,
    pub per_node_absolute: Vec<f64>,
    pub per_node_relative: Vec<f64>,
    pub requirement: WrenchSequence,
    pub relative_requirement: WrenchSequence,
    /// Per node, the pressure mix whose reaction is nearest the requirement.
    pub witness_pressures: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub attainable: bool,
    pub hulls: Option<Hulls>,
}

pub fn analyze(design: &ArmDesign, task: &Task, settings: &AnalysisSettings) -> Result<AttainabilityReport> {
    task.validate(design)?;
    if settings.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidTask(format!("distance weights must be positive, got {:?}", settings.weights)));
    }
    let space = PressureSpace::of_design(design);
    let samples = sample_pressure_edges(&space, settings.per_edge)?;
    let absolute = build_absolute_hulls(design, &task.shape, &samples)?;
    let relative = build_relative_hulls(design, &task.shape, &samples)?;

    let requirement = requirement_wrench_sequence(task);
    let relative_requirement = relative_sequence(&requirement);

    let mut per_node_absolute = Vec::with_capacity(absolute.len());
    let mut witness_pressures = Vec::with_capacity(absolute.len());
    for (h, w) in absolute.iter().zip(&requirement) {
        let np = h.nearest(w, &settings.weights);
        let mut mix = vec![0.0; space.dim()];
        for &(v, lambda) in &np.weights {
            for (m, p) in mix.iter_mut().zip(&samples[h.sources()[v]]) {
                *m += lambda * p;
            }
        }
        witness_pressures.push(space.from_unit(&space.to_unit(&mix)));
        per_node_absolute.push(np.distance);
    }
    let per_node_relative: Vec<f64> =
        relative.iter().zip(&relative_requirement).map(|(h, w)| h.nearest(w, &settings.weights).distance).collect();

    let absolute_unattainability = per_node_absolute.iter().sum();
    let relative_unattainability = per_node_relative.iter().sum();
    let epsilon = settings.epsilon.unwrap_or(1e-6 * design.segments as f64);
    Ok(AttainabilityReport {
        absolute_unattainability,
        relative_unattainability,
        per_node_absolute,
        per_node_relative,
        requirement,
        relative_requirement,
        witness_pressures,
        epsilon,
        attainable: absolute_unattainability < epsilon && relative_unattainability < epsilon,
        hulls: settings.keep_hulls.then_some(Hulls { absolute, relative, samples }),
    })
}

impl AttainabilityReport {
    pub fn total(&self) -> f64 {
        self.absolute_unattainability + self.relative_unattainability
    }

    /// `key = value` lines, then one line per node.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "attainable = {}", self.attainable);
        let _ = writeln!(s, "absolute_unattainability = {}", fmt_f64(self.absolute_unattainability));
        let _ = writeln!(s, "relative_unattainability = {}", fmt_f64(self.relative_unattainability));
        let _ = writeln!(s, "epsilon = {}", fmt_f64(self.epsilon));
        let _ = writeln!(s, "nodes = {}", self.per_node_absolute.len());
        for (i, (a, r)) in self.per_node_absolute.iter().zip(&self.per_node_relative).enumerate() {
            let p: Vec<String> = self.witness_pressures[i].iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(
                s,
                "node {i}: absolute = {} relative = {} witness = [{}]",
                fmt_f64(*a),
                fmt_f64(*r),
                p.join(", ")
            );
        }
        s
    }

    /// `node,absolute,relative` rows.
    pub fn per_node_csv(&self) -> String {
        csv_table(
            &["node", "absolute", "relative"],
            self.per_node_absolute
                .iter()
                .zip(&self.per_node_relative)
                .enumerate()
                .map(|(i, (a, r))| vec![i.to_string(), fmt_f64(*a), fmt_f64(*r)]),
        )
    }
}

/// `node,fx,fy,m` rows.
pub fn sequence_csv(seq: &[Wrench]) -> String {
    csv_table(
        &["node", "fx", "fy", "m"],
        seq.iter().enumerate().map(|(i, w)| vec![i.to_string(), fmt_f64(w.fx), fmt_f64(w.fy), fmt_f64(w.m)]),
    )
}

/// `node,vertex,fx,fy,m` rows, one per hull vertex.
pub fn hulls_csv(hulls: &[WrenchHull]) -> String {
    csv_table(
        &["node", "vertex", "fx", "fy", "m"],
        hulls.iter().enumerate().flat_map(|(i, h)| {
            h.vertices()
                .iter()
                .enumerate()
                .map(move |(k, w)| vec![i.to_string(), k.to_string(), fmt_f64(w.fx), fmt_f64(w.fy), fmt_f64(w.m)])
        }),
    )
}

/// Reads a hull dump back into per-node vertex lists.
pub fn read_hull_vertices(text: &str) -> Result<Vec<Vec<Wrench>>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut nodes: Vec<Vec<Wrench>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::InvalidGrid(format!("hull csv line {}: bad field {k}", line + 2)))
        };
        let node = field(0)? as usize;
        if nodes.len() <= node {
            nodes.resize(node + 1, Vec::new());
        }
        nodes[node].push(Wrench::new(field(2)?, field(3)?, field(4)?));
    }
    Ok(nodes)
}
