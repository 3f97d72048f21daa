//! Boundary-driven exclusion dynamics and nonlinear heat flow on pre-fractal
//! gasket graphs, with the associated large-deviation rate functionals.
//!
//! The crate is organized around six pieces:
//!
//! * [`graph`]: the gasket hierarchy and generic weighted graphs;
//! * [`calculus`]: energies, gradient/divergence, Laplacian, harmonic solves,
//!   effective resistance and normal derivatives;
//! * [`wasep`]: exact continuous-time simulation of the boundary-driven
//!   (weakly asymmetric) exclusion process with a per-edge current ledger,
//!   plus a dense generator oracle for small graphs in [`oracle`];
//! * [`observables`]: empirical density and integrated-current pairings and
//!   ensemble statistics;
//! * [`pde`]: the nonlinear heat equation with mobility-weighted drift,
//!   solved by a theta scheme on the graph;
//! * [`rate`]: conservation-law checks and the dynamical rate functionals
//!   evaluated on density-current trajectories.

// Validations use negated comparisons (`!(x > 0.0)`) so NaN lands on the
// rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod fields;
pub mod graph;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod pde;
pub mod rate;
pub mod rng;
pub mod tilt;
pub mod trajectory;
pub mod wasep;

pub use error::{Error, Result};
pub use fields::{CurrentField, DensityField, EdgeFunction, VertexFunction};
pub use graph::{build_sg, EdgeId, VertexId, WeightedGraph};
