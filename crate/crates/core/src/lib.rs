#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Task attainability analysis for planar pneumatic soft robot arms.

pub mod actuator;
pub mod arm;
pub mod attain;
pub mod config;
pub mod error;
pub mod harness;
pub mod hull;
pub mod io;
pub mod lie;
pub mod qp;
pub mod search;
pub mod shapes;
pub mod statics;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
