//! Search-based attainability: look for the pressure whose loaded equilibrium
//! shape best matches the task shape.
//!
//! The objective is evaluated by a full equilibrium solve, so this is slow
//! compared with the hull analysis; it serves as the reference the hull
//! metrics are checked against.

use std::time::{Duration, Instant};

use nalgebra::{Matrix3, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::{ArmDesign, ArmShape};
use crate::attain::{PressureSpace, Task};
use crate::error::{Error, Result};
use crate::lie::wrap_angle;
use crate::statics::{continuation_solve, solve_equilibrium, SolveSettings};

/// Per-node 3×3 weights on the `(x, y, theta)` pose error.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeErrorWeights {
    per_node: Vec<Matrix3<f64>>,
}

impl ShapeErrorWeights {
    pub fn new(per_node: Vec<Matrix3<f64>>) -> Result<Self> {
        for (i, k) in per_node.iter().enumerate() {
            if (k - k.transpose()).abs().max() > 1e-12 * (1.0 + k.abs().max()) {
                return Err(Error::InvalidTask(format!("shape weight {i} is not symmetric")));
            }
            let min = SymmetricEigen::new(*k).eigenvalues.min();
            if min < -1e-12 * (1.0 + k.abs().max()) {
                return Err(Error::InvalidTask(format!("shape weight {i} is not positive semidefinite")));
            }
        }
        Ok(Self { per_node })
    }

    pub fn identity(nodes: usize) -> Self {
        Self { per_node: vec![Matrix3::identity(); nodes] }
    }

    pub fn zeros(nodes: usize) -> Self {
        Self { per_node: vec![Matrix3::zeros(); nodes] }
    }

    /// Ignores orientation error.
    pub fn position_only(nodes: usize) -> Self {
        Self { per_node: vec![Matrix3::from_diagonal(&[1.0, 1.0, 0.0].into()); nodes] }
    }

    /// Only the last node counts.
    pub fn tip_only(nodes: usize) -> Self {
        let mut per_node = vec![Matrix3::zeros(); nodes];
        if let Some(last) = per_node.last_mut() {
            *last = Matrix3::identity();
        }
        Self { per_node }
    }

    pub fn nodes(&self) -> usize {
        self.per_node.len()
    }

    pub fn node(&self, i: usize) -> &Matrix3<f64> {
        &self.per_node[i]
    }
}

/// `Σ eᵢᵀ Kᵢ eᵢ` over the poses after each segment, where `eᵢ` is the
/// `(x, y, theta)` of `a_i⁻¹ ∘ b_i`.
pub fn shape_error(a: &ArmShape, b: &ArmShape, weights: &ShapeErrorWeights) -> Result<f64> {
    if a.segments() != b.segments() || weights.nodes() != a.segments() {
        return Err(Error::DimensionMismatch(format!(
            "shape error between {} and {} segments with {} weights",
            a.segments(),
            b.segments(),
            weights.nodes()
        )));
    }
    let mut s = 0.0;
    for (i, (ga, gb)) in a.poses()[1..].iter().zip(&b.poses()[1..]).enumerate() {
        if ga == gb {
            continue;
        }
        let d = ga.between(gb);
        let e = nalgebra::Vector3::new(d.x, d.y, wrap_angle(d.theta));
        s += e.dot(&(weights.node(i) * e));
    }
    Ok(s.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    NelderMead,
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub method: SearchMethod,
    pub starts: usize,
    /// Objective evaluations allowed per start.
    pub max_evaluations: usize,
    /// Fresh simplices built around the best point after a start converges.
    pub restarts: usize,
    /// Initial simplex edge in normalised pressure units.
    pub initial_step: f64,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    /// Stop a start as soon as the objective drops to this value.
    pub f_target: f64,
    pub seed: u64,
    pub parallel: bool,
    pub solve: SolveSettings,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            method: SearchMethod::NelderMead,
            starts: 5,
            max_evaluations: 400,
            restarts: 1,
            initial_step: 0.25,
            x_tolerance: 1e-9,
            f_tolerance: 1e-16,
            f_target: 1e-14,
            seed: 0,
            parallel: true,
            solve: SolveSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub s: f64,
    pub pressures: Vec<f64>,
    pub best_shape: ArmShape,
    pub evaluations: usize,
    /// Evaluations whose equilibrium solve failed.
    pub failed_evaluations: usize,
    pub elapsed: Duration,
}

/// Start points in `[0,1]^M`: the centre, then inset corners in seeded order.
pub fn start_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.5; dim]];
    let corners = 1usize.checked_shl(dim as u32).unwrap_or(usize::MAX).min(1 << 16);
    let mut order: Vec<usize> = (0..corners).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for c in order.into_iter().take(count.saturating_sub(1)) {
        pts.push((0..dim).map(|k| if (c >> k) & 1 == 1 { 0.8 } else { 0.2 }).collect());
    }
    pts.truncate(count.max(1));
    pts
}

struct Evaluator<'a> {
    design: &'a ArmDesign,
    task: &'a Task,
    weights: &'a ShapeErrorWeights,
    space: PressureSpace,
    settings: &'a SearchSettings,
    best: Option<(f64, Vec<f64>, ArmShape)>,
    warm: Option<ArmShape>,
    evaluations: usize,
    failed: usize,
}

impl Evaluator<'_> {
    fn equilibrium(&self, p: &[f64]) -> Option<ArmShape> {
        let q = &self.task.tip_load;
        let s = &self.settings.solve;
        for guess in [Some(&self.task.shape), self.warm.as_ref(), None] {
            if let Ok(r) = solve_equilibrium(self.design, p, q, guess, s) {
                if r.converged {
                    return Some(r.shape);
                }
            }
        }
        match continuation_solve(self.design, p, q, 8, s) {
            Ok(r) if r.converged => Some(r.shape),
            _ => None,
        }
    }

    fn eval(&mut self, u: &[f64]) -> f64 {
        self.evaluations += 1;
        let p = self.space.from_unit(u);
        let Some(shape) = self.equilibrium(&p) else {
            self.failed += 1;
            log::debug!("equilibrium failed at pressures {p:?}");
            return f64::INFINITY;
        };
        let s = shape_error(&shape, &self.task.shape, self.weights).unwrap_or(f64::INFINITY);
        if self.best.as_ref().is_none_or(|b| s < b.0) {
            self.warm = Some(shape.clone());
            self.best = Some((s, p, shape));
        }
        s
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.settings.max_evaluations
    }
}

/// Minimises the shape error over the pressure box.
///
/// Each evaluation solves for equilibrium starting from the task shape, then
/// from the best shape found so far, then from the neutral shape, and finally
/// by continuation. Evaluations where all of these fail score `+inf`.
pub fn search_attainability(
    design: &ArmDesign,
    task: &Task,
    weights: &ShapeErrorWeights,
    settings: &SearchSettings,
) -> Result<SearchResult> {
    task.validate(design)?;
    settings.solve.validate()?;
    if weights.nodes() != design.segments {
        return Err(Error::DimensionMismatch(format!(
            "{} shape weights for {} segments",
            weights.nodes(),
            design.segments
        )));
    }
    let started = Instant::now();
    let space = PressureSpace::of_design(design);
    let starts = start_points(space.dim(), settings.starts, settings.seed);

    let run = |x0: &Vec<f64>| {
        let mut ev = Evaluator {
            design,
            task,
            weights,
            space: space.clone(),
            settings,
            best: None,
            warm: None,
            evaluations: 0,
            failed: 0,
        };
        match settings.method {
            SearchMethod::NelderMead => {
                let mut x = x0.clone();
                for _ in 0..=settings.restarts {
                    let (xb, fb) = nelder_mead(&mut ev, &x);
                    x = xb;
                    if fb <= settings.f_target || ev.exhausted() {
                        break;
                    }
                }
            }
            SearchMethod::ProjectedGradient => projected_gradient(&mut ev, x0),
        }
        (ev.best, ev.evaluations, ev.failed)
    };
    let branches: Vec<_> =
        if settings.parallel { starts.par_iter().map(run).collect() } else { starts.iter().map(run).collect() };

    let evaluations = branches.iter().map(|b| b.1).sum();
    let failed_evaluations = branches.iter().map(|b| b.2).sum();
    let mut best: Option<(f64, Vec<f64>, ArmShape)> = None;
    for (b, _, _) in branches {
        if let Some(b) = b {
            if b.0.is_finite() && best.as_ref().is_none_or(|cur| b.0 < cur.0) {
                best = Some(b);
            }
        }
    }
    let (s, pressures, best_shape) = best.ok_or(Error::AllInfeasible)?;
    Ok(SearchResult { s, pressures, best_shape, evaluations, failed_evaluations, elapsed: started.elapsed() })
}

fn project(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

/// Nelder-Mead on `[0,1]^M` with trial points clamped into the box.
fn nelder_mead(ev: &mut Evaluator, x0: &[f64]) -> (Vec<f64>, f64) {
    let n = x0.len();
    let set = ev.settings;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = ev.eval(x0);
    simplex.push((x0.to_vec(), f0));
    if f0 <= set.f_target {
        return (x0.to_vec(), f0);
    }
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += if x[k] + set.initial_step <= 1.0 { set.initial_step } else { -set.initial_step };
        project(&mut x);
        let f = ev.eval(&x);
        simplex.push((x, f));
    }

    let point = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> {
        let mut x: Vec<f64> = c.iter().zip(d).map(|(a, b)| a + t * (b - a)).collect();
        project(&mut x);
        x
    };
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fb, fw) = (simplex[0].1, simplex[n].1);
        let spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if fb <= set.f_target
            || ev.exhausted()
            || spread <= set.x_tolerance
            || (fw.is_finite() && fw - fb <= set.f_tolerance)
        {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].0.clone();
        let xr = point(&centroid, &worst, -1.0);
        let fr = ev.eval(&xr);
        if fr < fb {
            let xe = point(&centroid, &worst, -2.0);
            let fe = ev.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < fw {
            let x = point(&centroid, &xr, 0.5);
            let f = ev.eval(&x);
            (x, f)
        } else {
            let x = point(&centroid, &worst, 0.5);
            let f = ev.eval(&x);
            (x, f)
        };
        if fc < fw.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = point(&best, &v.0, 0.5);
            let f = ev.eval(&x);
            *v = (x, f);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Projected steepest descent with forward-difference gradients and
/// backtracking on the step length.
fn projected_gradient(ev: &mut Evaluator, x0: &[f64]) {
    let set = ev.settings;
    let mut x = x0.to_vec();
    let mut f = ev.eval(&x);
    let mut step = set.initial_step;
    let h = 1e-6;
    while f.is_finite() && f > set.f_target && !ev.exhausted() && step > set.x_tolerance {
        let g: Vec<f64> = (0..x.len())
            .map(|k| {
                let mut xh = x.clone();
                let dir = if xh[k] + h <= 1.0 { h } else { -h };
                xh[k] += dir;
                (ev.eval(&xh) - f) / dir
            })
            .collect();
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !gn.is_finite() || gn == 0.0 {
            break;
        }
        let mut improved = false;
        while step > set.x_tolerance && !ev.exhausted() {
            let mut xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
            project(&mut xn);
            let fn_ = ev.eval(&xn);
            if fn_ < f {
                x = xn;
                f = fn_;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
}
