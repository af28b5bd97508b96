//! The adversarial one-dimensional objectives and their inductive builder.

mod construction;
pub mod format;
mod piecewise;

pub use construction::{
    build_hard_function, check_consistency, extend_plateau, phase_index, phase_unit, ConstructionResult,
    HardFnParams, PRECISION_GUARD,
};
pub use piecewise::{Interval, PiecewiseQuadratic, Plateau};
