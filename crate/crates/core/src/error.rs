use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("pressure {value} Pa for actuator {actuator} outside [0, {max}]")]
    PressureOutOfRange { actuator: usize, value: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("force grid query outside {axis} axis: {value} not in [{min}, {max}]")]
    GridOutOfRange { axis: &'static str, value: f64, min: f64, max: f64 },

    #[error("invalid force grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite residual at node {node}")]
    NonFiniteResidual { node: usize },

    #[error("equilibrium solve did not converge (residual {residual:e})")]
    NotConverged { residual: f64 },

    #[error("continuation failed at step {step}: {source}")]
    ContinuationFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate wrench hull at node {node}: {reason}")]
    DegenerateHull { node: usize, reason: String },

    #[error("search found no pressure with a converged equilibrium")]
    AllInfeasible,

    #[error("config error in {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
