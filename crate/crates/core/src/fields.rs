//! Vertex and edge functions on a weighted graph.
//!
//! A [`VertexFunction`] stores one real value per vertex. An [`EdgeFunction`]
//! stores one real value per edge, interpreted relative to the fixed edge
//! orientation: the value on the reversed edge is the negative of the stored
//! one, so antisymmetry holds by construction and each edge is stored once.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, VertexId, WeightedGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// Builds a function from vertex id to value.
    pub fn from_fn(n: usize, mut f: impl FnMut(VertexId) -> f64) -> Self {
        Self((0..n).map(|i| f(i as VertexId)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn check_len(&self, g: &WeightedGraph, context: &'static str) -> Result<()> {
        if self.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch {
                context,
                expected: g.vertex_count(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl Index<VertexId> for VertexFunction {
    type Output = f64;
    fn index(&self, v: VertexId) -> &f64 {
        &self.0[v as usize]
    }
}

impl IndexMut<VertexId> for VertexFunction {
    fn index_mut(&mut self, v: VertexId) -> &mut f64 {
        &mut self.0[v as usize]
    }
}

/// Antisymmetric edge function, stored once per oriented edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFunction(Vec<f64>);

impl EdgeFunction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Value along the stored orientation of `e`.
    pub fn along(&self, e: EdgeId) -> f64 {
        self.0[e as usize]
    }

    /// Value seen when traversing `e` out of vertex `from` (sign flips when
    /// `from` is the head).
    pub fn from_vertex(&self, g: &WeightedGraph, e: EdgeId, from: VertexId) -> f64 {
        let edge = &g.edges()[e as usize];
        let v = self.0[e as usize];
        if edge.tail == from {
            v
        } else {
            debug_assert_eq!(edge.head, from);
            -v
        }
    }

    pub(crate) fn check_len(&self, g: &WeightedGraph, context: &'static str) -> Result<()> {
        if self.len() != g.edge_count() {
            return Err(Error::DimensionMismatch {
                context,
                expected: g.edge_count(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl Index<EdgeId> for EdgeFunction {
    type Output = f64;
    fn index(&self, e: EdgeId) -> &f64 {
        &self.0[e as usize]
    }
}

impl IndexMut<EdgeId> for EdgeFunction {
    fn index_mut(&mut self, e: EdgeId) -> &mut f64 {
        &mut self.0[e as usize]
    }
}

/// Density profiles live on vertices; integrated currents live on edges.
pub type DensityField = VertexFunction;
pub type CurrentField = EdgeFunction;
