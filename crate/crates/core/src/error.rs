use thiserror::Error;

use crate::graph::VertexId;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected length {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("gasket level {level} is not supported: 3^(N+1) edges must fit in u32, so N <= {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("vertex {0} is not a boundary vertex")]
    NotBoundary(VertexId),

    #[error(
        "linear solve failed: relative residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.1e})"
    )]
    SolveFailed {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error(
        "envelope violated on edge {edge}: rate {rate:.6e} exceeds envelope {envelope:.6e}; the declared tilt bound is too small"
    )]
    EnvelopeViolated { edge: u32, rate: f64, envelope: f64 },

    #[error("state space 2^{vertices} exceeds the dense generator limit of 2^{max} states")]
    StateSpaceTooLarge { vertices: usize, max: usize },

    #[error(
        "initial density is incompatible with the reservoirs: vertex {vertex} has {got} but the boundary value is {want}; initial data must match the boundary values exactly"
    )]
    IncompatibleInitialData { vertex: VertexId, got: f64, want: f64 },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("trajectory is invalid: {0}")]
    InvalidTrajectory(String),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
