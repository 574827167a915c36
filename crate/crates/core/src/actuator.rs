//! Uniaxial force and bending-moment models for pneumatic actuators.
//!
//! Sign convention: a positive force pushes (the actuator tries to extend),
//! a negative force pulls. Bellows extend under pressure; McKibben muscles
//! contract. Every model here is continuous and monotonic in pressure at any
//! fixed strain, which the hull construction relies on.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bending stiffness shared by both actuator types, N·m².
pub const DEFAULT_BENDING_K: f64 = -0.285;
pub const BELLOWS_MAX_PRESSURE: f64 = 50e3;
pub const MCKIBBEN_MAX_PRESSURE: f64 = 100e3;

/// Analytic McKibben muscle: `f = -k·eps - (p/p_rated)·F·(1 + eps/eps_free)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McKibbenParams {
    /// Passive axial stiffness, N per unit strain.
    pub stiffness: f64,
    /// Blocked force magnitude at rated pressure and zero strain, N.
    pub blocked_force: f64,
    /// Strain magnitude at which the active force vanishes.
    pub free_strain: f64,
    pub rated_pressure: f64,
    pub min_strain: f64,
    pub max_strain: f64,
}

impl Default for McKibbenParams {
    fn default() -> Self {
        Self {
            stiffness: 80.0,
            blocked_force: 60.0,
            free_strain: 0.25,
            rated_pressure: MCKIBBEN_MAX_PRESSURE,
            min_strain: -0.35,
            max_strain: 0.1,
        }
    }
}

/// Analytic bellows: `f = p·A - k·eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BellowsParams {
    /// Effective area, m².
    pub area: f64,
    /// Passive axial stiffness, N per unit strain.
    pub stiffness: f64,
    pub min_strain: f64,
    pub max_strain: f64,
}

impl Default for BellowsParams {
    fn default() -> Self {
        Self { area: 1e-3, stiffness: 40.0, min_strain: -0.05, max_strain: 1.0 }
    }
}

/// Tabulated force samples over (strain, pressure), row-major by strain.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceGrid {
    strain_axis: Vec<f64>,
    pressure_axis: Vec<f64>,
    values: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidGrid(format!("{name} axis needs at least 2 entries")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

/// Index of the cell containing `v` and the local coordinate in `[0, 1]`.
fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    let hi = axis.partition_point(|&a| a <= v).clamp(1, axis.len() - 1);
    let lo = hi - 1;
    (lo, (v - axis[lo]) / (axis[hi] - axis[lo]))
}

impl ForceGrid {
    pub fn new(strain_axis: Vec<f64>, pressure_axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_axis("strain", &strain_axis)?;
        check_axis("pressure", &pressure_axis)?;
        if values.len() != strain_axis.len() * pressure_axis.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {}x{} values, got {}",
                strain_axis.len(),
                pressure_axis.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("force values must be finite".into()));
        }
        Ok(Self { strain_axis, pressure_axis, values })
    }

    /// Samples `f(strain, pressure)` on the given axes.
    pub fn tabulate(strain_axis: Vec<f64>, pressure_axis: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = strain_axis
            .iter()
            .flat_map(|&e| pressure_axis.iter().map(move |&p| (e, p)))
            .map(|(e, p)| f(e, p))
            .collect();
        Self::new(strain_axis, pressure_axis, values)
    }

    pub fn strain_axis(&self) -> &[f64] {
        &self.strain_axis
    }

    pub fn pressure_axis(&self) -> &[f64] {
        &self.pressure_axis
    }

    pub fn value(&self, strain_index: usize, pressure_index: usize) -> f64 {
        self.values[strain_index * self.pressure_axis.len() + pressure_index]
    }

    pub fn set_value(&mut self, strain_index: usize, pressure_index: usize, v: f64) {
        let n = self.pressure_axis.len();
        self.values[strain_index * n + pressure_index] = v;
    }

    pub fn strain_range(&self) -> (f64, f64) {
        (self.strain_axis[0], *self.strain_axis.last().unwrap())
    }

    pub fn pressure_range(&self) -> (f64, f64) {
        (self.pressure_axis[0], *self.pressure_axis.last().unwrap())
    }

    /// Bilinear interpolation. Queries outside the grid are rejected.
    pub fn force(&self, eps: f64, p: f64) -> Result<f64> {
        let (emin, emax) = self.strain_range();
        if !(emin..=emax).contains(&eps) {
            return Err(Error::GridOutOfRange { axis: "strain", value: eps, min: emin, max: emax });
        }
        let (pmin, pmax) = self.pressure_range();
        if !(pmin..=pmax).contains(&p) {
            return Err(Error::GridOutOfRange { axis: "pressure", value: p, min: pmin, max: pmax });
        }
        let (i, u) = locate(&self.strain_axis, eps);
        let (j, v) = locate(&self.pressure_axis, p);
        let f00 = self.value(i, j);
        let f01 = self.value(i, j + 1);
        let f10 = self.value(i + 1, j);
        let f11 = self.value(i + 1, j + 1);
        Ok((1.0 - u) * ((1.0 - v) * f00 + v * f01) + u * ((1.0 - v) * f10 + v * f11))
    }

    /// Reads the CSV layout: first row holds the pressure axis (Pa) after a
    /// corner cell, first column the strain axis, body the forces in newtons.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut rows = rdr.records();
        let header = rows.next().ok_or_else(|| Error::InvalidGrid("empty CSV".into()))??;
        let parse = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::InvalidGrid(format!("line {line}: cannot parse '{s}' as a number")))
        };
        let pressure_axis = header.iter().skip(1).map(|s| parse(s, 1)).collect::<Result<Vec<_>>>()?;
        let mut strain_axis = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in rows.enumerate() {
            let rec = rec?;
            let line = k + 2;
            if rec.len() != pressure_axis.len() + 1 {
                return Err(Error::InvalidGrid(format!(
                    "line {line}: expected {} fields, found {}",
                    pressure_axis.len() + 1,
                    rec.len()
                )));
            }
            strain_axis.push(parse(&rec[0], line)?);
            for s in rec.iter().skip(1) {
                values.push(parse(s, line)?);
            }
        }
        Self::new(strain_axis, pressure_axis, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("strain\\pressure");
        for p in &self.pressure_axis {
            out.push_str(&format!(",{}", crate::io::fmt_f64(*p)));
        }
        out.push('\n');
        for (i, e) in self.strain_axis.iter().enumerate() {
            out.push_str(&crate::io::fmt_f64(*e));
            for j in 0..self.pressure_axis.len() {
                out.push_str(&format!(",{}", crate::io::fmt_f64(self.value(i, j))));
            }
            out.push('\n');
        }
        out
    }
}

/// Axial force law of an actuator.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceModel {
    McKibben(McKibbenParams),
    Bellows(BellowsParams),
    Grid(Arc<ForceGrid>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorKind {
    Mckibben,
    Bellows,
    Grid,
}

/// Result of a force evaluation; `clamped` is set when the strain was
/// pulled back into the model's admissible range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceEval {
    pub force: f64,
    pub clamped: bool,
}

pub fn mckibben_force(eps: f64, p: f64, params: &McKibbenParams) -> ForceEval {
    let e = eps.clamp(params.min_strain, params.max_strain);
    let active = (p / params.rated_pressure) * params.blocked_force * (1.0 + e / params.free_strain);
    ForceEval { force: -params.stiffness * e - active, clamped: e != eps }
}

pub fn bellows_force(eps: f64, p: f64, params: &BellowsParams) -> ForceEval {
    let e = eps.clamp(params.min_strain, params.max_strain);
    ForceEval { force: p * params.area - params.stiffness * e, clamped: e != eps }
}

/// Bilinear grid force with the strain clamped into the grid (pressure is
/// assumed already validated against the grid's pressure range).
pub fn grid_force(grid: &ForceGrid, eps: f64, p: f64) -> Result<f64> {
    grid.force(eps, p)
}

/// Pressure-dependent linear bending stiffness: `tau = K·(p/p_ref)·kappa`.
pub fn bending_moment(kappa: f64, p: f64, k: f64, p_ref: f64) -> f64 {
    k * (p / p_ref) * kappa
}

/// One actuator's complete constitutive description.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorModel {
    pub force: ForceModel,
    pub max_pressure: f64,
    pub bending_k: f64,
    pub reference_pressure: f64,
}

impl ActuatorModel {
    pub fn mckibben(params: McKibbenParams) -> Self {
        Self {
            force: ForceModel::McKibben(params),
            max_pressure: MCKIBBEN_MAX_PRESSURE,
            bending_k: DEFAULT_BENDING_K,
            reference_pressure: MCKIBBEN_MAX_PRESSURE,
        }
    }

    pub fn bellows(params: BellowsParams) -> Self {
        Self {
            force: ForceModel::Bellows(params),
            max_pressure: BELLOWS_MAX_PRESSURE,
            bending_k: DEFAULT_BENDING_K,
            reference_pressure: BELLOWS_MAX_PRESSURE,
        }
    }

    pub fn grid(grid: ForceGrid, bending_k: f64) -> Self {
        let (_, pmax) = grid.pressure_range();
        Self { force: ForceModel::Grid(Arc::new(grid)), max_pressure: pmax, bending_k, reference_pressure: pmax }
    }

    pub fn kind(&self) -> ActuatorKind {
        match self.force {
            ForceModel::McKibben(_) => ActuatorKind::Mckibben,
            ForceModel::Bellows(_) => ActuatorKind::Bellows,
            ForceModel::Grid(_) => ActuatorKind::Grid,
        }
    }

    pub fn strain_range(&self) -> (f64, f64) {
        match &self.force {
            ForceModel::McKibben(m) => (m.min_strain, m.max_strain),
            ForceModel::Bellows(b) => (b.min_strain, b.max_strain),
            ForceModel::Grid(g) => g.strain_range(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_pressure > 0.0 && self.max_pressure.is_finite()) {
            return Err(Error::InvalidDesign(format!("max_pressure must be positive, got {}", self.max_pressure)));
        }
        if !(self.reference_pressure > 0.0 && self.reference_pressure.is_finite()) {
            return Err(Error::InvalidDesign("reference_pressure must be positive".into()));
        }
        if !self.bending_k.is_finite() {
            return Err(Error::InvalidDesign("bending_k must be finite".into()));
        }
        if let ForceModel::Grid(g) = &self.force {
            let (pmin, pmax) = g.pressure_range();
            if pmin > 0.0 || pmax < self.max_pressure {
                return Err(Error::InvalidDesign(format!(
                    "force grid pressure axis [{pmin}, {pmax}] does not cover [0, {}]",
                    self.max_pressure
                )));
            }
        }
        Ok(())
    }

    /// Axial force with strain clamping.
    pub fn axial_force(&self, eps: f64, p: f64) -> ForceEval {
        match &self.force {
            ForceModel::McKibben(m) => mckibben_force(eps, p, m),
            ForceModel::Bellows(b) => bellows_force(eps, p, b),
            ForceModel::Grid(g) => {
                let (lo, hi) = g.strain_range();
                let e = eps.clamp(lo, hi);
                let (plo, phi) = g.pressure_range();
                let force = g.force(e, p.clamp(plo, phi)).expect("clamped query lies inside the grid");
                ForceEval { force, clamped: e != eps }
            }
        }
    }

    pub fn bending_moment(&self, kappa: f64, p: f64) -> f64 {
        bending_moment(kappa, p, self.bending_k, self.reference_pressure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub strain: f64,
    pub pressure: f64,
}

/// Per-strain monotonicity-in-pressure check of an actuator model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub per_strain: Vec<(f64, Monotonicity)>,
    pub violations: Vec<MonotonicityViolation>,
}

impl ModelReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `f(eps, ·)` is monotone along every strain sample. A violation
/// is reported at the pressure sample that ends the first slope of the wrong sign.
pub fn validate_model(model: &ActuatorModel, strain_samples: &[f64], pressure_samples: &[f64]) -> ModelReport {
    let mut per_strain = Vec::with_capacity(strain_samples.len());
    let mut violations = Vec::new();
    for &eps in strain_samples {
        let forces: Vec<f64> = pressure_samples.iter().map(|&p| model.axial_force(eps, p).force).collect();
        let scale = forces.iter().fold(1.0f64, |m, f| m.max(f.abs()));
        let tol = 1e-12 * scale;
        let mut sign = 0i8;
        let mut flag = Monotonicity::Constant;
        for (k, w) in forces.windows(2).enumerate() {
            let d = w[1] - w[0];
            let s = if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            };
            if s == 0 {
                continue;
            }
            if sign == 0 {
                sign = s;
                flag = if s > 0 { Monotonicity::Increasing } else { Monotonicity::Decreasing };
            } else if s != sign {
                flag = Monotonicity::Violated;
                violations.push(MonotonicityViolation { strain: eps, pressure: pressure_samples[k + 1] });
                break;
            }
        }
        per_strain.push((eps, flag));
    }
    ModelReport { per_strain, violations }
}

/// Evenly spaced samples over `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}
