//! TOML files for designs, tasks and experiments.
//!
//! Design file:
//!
//! ```toml
//! name = "antagonistic"
//! segments = 5
//! shear_penalty = 1e5          # optional
//! base_pose = [0.0, 0.0, 0.0]  # optional
//!
//! [[actuators]]
//! kind = "bellows"             # bellows | mckibben | grid
//! offset = 0.025
//! neutral_length = 0.5
//! max_pressure = 50e3          # optional
//! bending_k = -0.285           # optional
//! reference_pressure = 50e3    # optional
//! params = { area = 1e-3 }     # optional, model coefficients
//! grid = "bellows.csv"         # grid kind only, relative to the file
//! ```
//!
//! A design file may instead hold just `builtin = "antagonistic"`.
//!
//! Task file:
//!
//! ```toml
//! load = [7.0, 0.0, 0.0]
//! consistent_shear = false
//! [shape]
//! kind = "constant_curvature"
//! length = 0.5
//! curvature = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::actuator::{ActuatorKind, ActuatorModel, BellowsParams, ForceGrid, McKibbenParams};
use crate::arm::{Actuator, ArmDesign, DEFAULT_SHEAR_PENALTY};
use crate::attain::{AnalysisSettings, Task};
use crate::error::{Error, Result};
use crate::lie::{Pose, Wrench};
use crate::search::SearchSettings;
use crate::shapes::ShapeSpec;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let at = e.span().map(|s| format!("line {}: ", line_of(text, s.start))).unwrap_or_default();
        config_error(path, format!("{at}{}", e.message()))
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuatorFile {
    kind: ActuatorKind,
    offset: Spanned<f64>,
    neutral_length: Spanned<f64>,
    max_pressure: Option<Spanned<f64>>,
    bending_k: Option<f64>,
    reference_pressure: Option<Spanned<f64>>,
    params: Option<toml::Table>,
    grid: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    builtin: Option<String>,
    name: Option<String>,
    segments: Option<Spanned<usize>>,
    shear_penalty: Option<Spanned<f64>>,
    base_pose: Option<[f64; 3]>,
    #[serde(default)]
    actuators: Vec<Spanned<ActuatorFile>>,
}

/// Parses a design. `base_dir` resolves relative grid paths.
pub fn design_from_str(text: &str, path: &str, base_dir: &Path) -> Result<ArmDesign> {
    let f: DesignFile = parse(text, path)?;
    let at = |off: usize| format!("line {}", line_of(text, off));
    if let Some(name) = &f.builtin {
        let mut d =
            ArmDesign::builtin(name).ok_or_else(|| config_error(path, format!("unknown builtin design `{name}`")))?;
        if let Some(n) = &f.segments {
            d.segments = *n.get_ref();
        }
        if let Some(s) = &f.shear_penalty {
            d.shear_penalty = *s.get_ref();
        }
        if let Some(p) = f.base_pose {
            d.base_pose = Pose::new(p[0], p[1], p[2]);
        }
        if !f.actuators.is_empty() {
            return Err(config_error(path, "`builtin` designs cannot also list actuators"));
        }
        d.validate().map_err(|e| config_error(path, e.to_string()))?;
        return Ok(d);
    }
    let segments = f.segments.as_ref().ok_or_else(|| config_error(path, "missing field `segments`"))?;
    if *segments.get_ref() == 0 {
        return Err(config_error(path, format!("{}: `segments` must be at least 1", at(segments.span().start))));
    }
    if f.actuators.len() < 2 {
        return Err(config_error(path, "need at least two [[actuators]] entries"));
    }
    let mut actuators = Vec::with_capacity(f.actuators.len());
    for (k, spanned) in f.actuators.iter().enumerate() {
        let a = spanned.get_ref();
        let field =
            |name: &str, off: usize, msg: &str| config_error(path, format!("{}: actuators[{k}].{name} {msg}", at(off)));
        if !(*a.neutral_length.get_ref() > 0.0) {
            return Err(field("neutral_length", a.neutral_length.span().start, "must be positive"));
        }
        if !a.offset.get_ref().is_finite() {
            return Err(field("offset", a.offset.span().start, "must be finite"));
        }
        let params = a.params.clone().unwrap_or_default();
        let bad_params =
            |e: toml::de::Error| field("params", spanned.span().start, &format!("invalid: {}", e.message()));
        let mut model = match a.kind {
            ActuatorKind::Mckibben => {
                let p: McKibbenParams = params.try_into().map_err(bad_params)?;
                let mut m = ActuatorModel::mckibben(p);
                m.max_pressure = p.rated_pressure;
                m.reference_pressure = p.rated_pressure;
                m
            }
            ActuatorKind::Bellows => ActuatorModel::bellows(params.try_into::<BellowsParams>().map_err(bad_params)?),
            ActuatorKind::Grid => {
                let g = a
                    .grid
                    .as_ref()
                    .ok_or_else(|| field("grid", spanned.span().start, "is required for grid actuators"))?;
                let grid = ForceGrid::from_csv_path(base_dir.join(g))
                    .map_err(|e| field("grid", spanned.span().start, &format!("`{g}`: {e}")))?;
                ActuatorModel::grid(grid, a.bending_k.unwrap_or(crate::actuator::DEFAULT_BENDING_K))
            }
        };
        if let Some(p) = &a.max_pressure {
            if !(*p.get_ref() > 0.0) {
                return Err(field("max_pressure", p.span().start, "must be positive"));
            }
            model.max_pressure = *p.get_ref();
        }
        if let Some(k) = a.bending_k {
            model.bending_k = k;
        }
        if let Some(p) = &a.reference_pressure {
            if !(*p.get_ref() > 0.0) {
                return Err(field("reference_pressure", p.span().start, "must be positive"));
            }
            model.reference_pressure = *p.get_ref();
        }
        model
            .validate()
            .map_err(|e| config_error(path, format!("{}: actuators[{k}]: {e}", at(spanned.span().start))))?;
        actuators.push(Actuator::new(*a.offset.get_ref(), *a.neutral_length.get_ref(), model));
    }
    let mut d = ArmDesign {
        name: f.name.unwrap_or_else(|| "design".into()),
        actuators,
        segments: *segments.get_ref(),
        base_pose: f.base_pose.map(|p| Pose::new(p[0], p[1], p[2])).unwrap_or(Pose::IDENTITY),
        shear_penalty: DEFAULT_SHEAR_PENALTY,
    };
    if let Some(s) = &f.shear_penalty {
        if !(*s.get_ref() > 0.0) {
            return Err(config_error(path, format!("{}: `shear_penalty` must be positive", at(s.span().start))));
        }
        d.shear_penalty = *s.get_ref();
    }
    d.validate().map_err(|e| config_error(path, e.to_string()))?;
    Ok(d)
}

/// Loads a design from a file, or a builtin by name when no such file exists.
pub fn load_design(spec: &str) -> Result<ArmDesign> {
    let p = Path::new(spec);
    if p.is_file() {
        let text = std::fs::read_to_string(p)?;
        return design_from_str(&text, spec, p.parent().unwrap_or(Path::new(".")));
    }
    ArmDesign::builtin(spec)
        .ok_or_else(|| config_error(spec, "no such design file or builtin (antagonistic, bellows_only, muscle_only)"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    load: [f64; 3],
    #[serde(default)]
    consistent_shear: bool,
    shape: ShapeSpec,
}

pub fn task_from_str(text: &str, path: &str, design: &ArmDesign) -> Result<Task> {
    let f: TaskFile = parse(text, path)?;
    let shape = f.shape.build(design.segments).map_err(|e| config_error(path, format!("shape: {e}")))?;
    let shape = crate::arm::ArmShape::new(design.base_pose, shape.twists().to_vec());
    let load = Wrench::from_array(f.load);
    let task =
        if f.consistent_shear { Task::with_consistent_shear(design, &shape, load)? } else { Task::new(shape, load) };
    task.validate(design).map_err(|e| config_error(path, e.to_string()))?;
    Ok(task)
}

pub fn load_task(path: &str, design: &ArmDesign) -> Result<Task> {
    let text = std::fs::read_to_string(path)?;
    task_from_str(&text, path, design)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    #[default]
    Hull,
    Search,
    Both,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSampling {
    #[serde(default = "default_load_count")]
    pub count: usize,
    /// Half-widths of the `(fx, fy, m)` box.
    #[serde(default = "default_load_ranges")]
    pub ranges: [f64; 3],
    /// Explicit loads; when present, `count` and `ranges` are ignored.
    pub explicit: Option<Vec<[f64; 3]>>,
}

fn default_load_count() -> usize {
    67
}

fn default_load_ranges() -> [f64; 3] {
    [10.0, 10.0, 1.0]
}

impl Default for LoadSampling {
    fn default() -> Self {
        Self { count: default_load_count(), ranges: default_load_ranges(), explicit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Design file paths (relative to the spec) or builtin names.
    pub designs: Vec<String>,
    pub task_shapes: Vec<ShapeSpec>,
    #[serde(default)]
    pub loads: LoadSampling,
    #[serde(default)]
    pub analysis: AnalysisKind,
    #[serde(default = "default_true")]
    pub consistent_shear: bool,
    #[serde(default)]
    pub hull: AnalysisSettings,
    #[serde(default)]
    pub search: SearchSettings,
    pub output_dir: Option<PathBuf>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_true() -> bool {
    true
}

impl ExperimentSpec {
    pub fn from_str(text: &str, path: &str) -> Result<Self> {
        let spec: Self = parse(text, path)?;
        spec.validate(path)?;
        Ok(spec)
    }

    pub fn load(path: &str) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?, path)
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.designs.is_empty() {
            return Err(config_error(path, "`designs` must list at least one design"));
        }
        if self.task_shapes.is_empty() {
            return Err(config_error(path, "`task_shapes` must list at least one shape"));
        }
        match &self.loads.explicit {
            Some(list) if list.iter().flatten().any(|v| !v.is_finite()) => {
                return Err(config_error(path, "loads.explicit: values must be finite"))
            }
            None if self.loads.count == 0 => return Err(config_error(path, "loads.count must be at least 1")),
            None if self.loads.ranges.iter().any(|r| !(r.is_finite() && *r >= 0.0)) => {
                return Err(config_error(path, "loads.ranges must be finite and non-negative"))
            }
            _ => {}
        }
        self.search.solve.validate().map_err(|e| config_error(path, format!("search.solve: {e}")))?;
        Ok(())
    }

    /// Resolves design references relative to `base_dir`.
    pub fn resolve_designs(&self, base_dir: &Path) -> Result<Vec<ArmDesign>> {
        self.designs
            .iter()
            .map(|d| {
                let p = base_dir.join(d);
                if p.is_file() {
                    load_design(&p.to_string_lossy())
                } else {
                    load_design(d)
                }
            })
            .collect()
    }
}
