use thiserror::Error;

use crate::kinetic_solver::KineticState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid velocity grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("direction vector is not unit length (|n| = {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("distribution has negative value {value:e} at node {node}")]
    NegativeDistribution { node: usize, value: f64 },

    #[error("constraint Gram matrix is singular (pivot ratio {ratio:e})")]
    SingularConstraints { ratio: f64 },

    #[error("unknown test function `{0}`")]
    UnknownTestFunction(String),

    #[error("kernel family mismatch: expected {expected}, got {found}")]
    WrongKernel {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("quadrature did not converge after order {order} (last relative change {change:e})")]
    NonConvergence { order: usize, change: f64 },

    #[error("time step {dt:e} exceeds stability bound {limit:e}")]
    TimeStep { dt: f64, limit: f64 },

    #[error("non-finite value in kinetic state at t = {time}")]
    NonFinite {
        time: f64,
        dump: Box<KineticState>,
    },

    #[error("non-finite or non-physical macroscopic state in cell {cell}: {reason}")]
    MacroState { cell: usize, reason: String },

    #[error("Newton iteration diverged in cell {cell} (residual {residual:e})")]
    NewtonDivergence { cell: usize, residual: f64 },

    #[error("volume fraction {alpha} out of admissible range in cell {cell}")]
    AlphaOutOfRange { cell: usize, alpha: f64 },

    #[error("control volume {0} is empty")]
    EmptyVolume(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
