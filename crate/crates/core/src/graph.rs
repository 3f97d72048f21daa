//! Weighted graphs and the pre-fractal gasket hierarchy.
//!
//! `Gamma_0` is the triangle on the three corners `a0, a1, a2`. Level `N` is
//! built from three half-scale copies of level `N-1`, one contracted toward
//! each corner, glued at the corner midpoints. Vertex counts follow
//! `|V_N| = (3^(N+1) + 3) / 2` and edge counts `|E_N| = 3^(N+1)`.
//!
//! Construction works on an exact integer lattice: a vertex at level `N` has
//! coordinates `(u, v)` with planar position `((u + v/2) / 2^N, v * sqrt(3)/2 / 2^N)`,
//! so gluing and level nesting are exact and vertex indexing is reproducible
//! (lexicographic in the planar coordinates).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::VertexFunction;

pub type VertexId = u32;
pub type EdgeId = u32;

/// Largest supported gasket level: 3^(N+1) must fit in u32.
pub const SG_MAX_LEVEL: u32 = 19;

#[derive(Clone, Debug)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    pub boundary: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Tail of the fixed orientation; always the lower vertex index.
    pub tail: VertexId,
    pub head: VertexId,
    pub conductance: f64,
}

impl Edge {
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.tail == v {
            self.head
        } else {
            self.tail
        }
    }

    /// +1 if `v` is the tail of the fixed orientation, -1 if it is the head.
    pub fn sign_from(&self, v: VertexId) -> f64 {
        if self.tail == v {
            1.0
        } else {
            debug_assert_eq!(self.head, v);
            -1.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    /// Per vertex: (neighbor, edge id) pairs, sorted by edge id.
    incidence: Vec<Vec<(VertexId, EdgeId)>>,
    boundary: Vec<VertexId>,
    interior: Vec<VertexId>,
    level: Option<u32>,
    /// Integer lattice coordinates for gasket graphs, denominator 2^N.
    lattice: Option<Vec<(u64, u64)>>,
    /// Corner triples of the level-N cells, for gasket graphs.
    cells: Option<Vec<[VertexId; 3]>>,
}

impl WeightedGraph {
    /// Builds a generic weighted graph. Edges are given as (a, b, conductance)
    /// with a != b; the stored orientation puts the lower index at the tail.
    pub fn new(
        coordinates: Vec<(f64, f64)>,
        edge_list: Vec<(VertexId, VertexId, f64)>,
        boundary: Vec<VertexId>,
    ) -> Result<Self> {
        let n = coordinates.len();
        let mut boundary_flags = vec![false; n];
        for &b in &boundary {
            if b as usize >= n {
                return Err(Error::InvalidGraph(format!(
                    "boundary vertex {b} out of range (|V| = {n})"
                )));
            }
            if boundary_flags[b as usize] {
                return Err(Error::InvalidGraph(format!("duplicate boundary vertex {b}")));
            }
            boundary_flags[b as usize] = true;
        }

        let vertices: Vec<Vertex> = coordinates
            .iter()
            .zip(&boundary_flags)
            .map(|(&(x, y), &boundary)| Vertex { x, y, boundary })
            .collect();

        let mut edges = Vec::with_capacity(edge_list.len());
        let mut seen = std::collections::HashSet::new();
        for (a, b, c) in edge_list {
            if a == b {
                return Err(Error::InvalidGraph(format!("loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range (|V| = {n})"
                )));
            }
            if !(c > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive conductance {c}"
                )));
            }
            let (tail, head) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((tail, head)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({tail}, {head})")));
            }
            edges.push(Edge { tail, head, conductance: c });
        }

        Self::assemble(vertices, edges, None, None, None)
    }

    fn assemble(
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        level: Option<u32>,
        lattice: Option<Vec<(u64, u64)>>,
        cells: Option<Vec<[VertexId; 3]>>,
    ) -> Result<Self> {
        let n = vertices.len();
        let mut incidence: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            incidence[e.tail as usize].push((e.head, i as EdgeId));
            incidence[e.head as usize].push((e.tail, i as EdgeId));
        }

        // Connectivity check; every operation downstream assumes one component.
        if n > 0 {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1usize;
            while let Some(v) = stack.pop() {
                for &(w, _) in &incidence[v] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        count += 1;
                        stack.push(w as usize);
                    }
                }
            }
            if count != n && n > 1 {
                return Err(Error::InvalidGraph(format!(
                    "graph is disconnected ({count} of {n} vertices reachable)"
                )));
            }
        }

        let boundary: Vec<VertexId> = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.boundary)
            .map(|(i, _)| i as VertexId)
            .collect();
        let interior: Vec<VertexId> = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.boundary)
            .map(|(i, _)| i as VertexId)
            .collect();

        Ok(Self {
            vertices,
            edges,
            incidence,
            boundary,
            interior,
            level,
            lattice,
            cells,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e as usize]
    }

    /// Incident (neighbor, edge) pairs of `v`.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.incidence[v as usize]
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.vertices[v as usize].boundary
    }

    /// Gasket level, `None` for generic graphs.
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    /// Prefactor (5/3)^N of the renormalized energy form; 1 on generic graphs.
    pub fn energy_prefactor(&self) -> f64 {
        match self.level {
            Some(n) => (5.0f64 / 3.0).powi(n as i32),
            None => 1.0,
        }
    }

    /// Weight (3/5)^N of the edge inner product; 1 on generic graphs.
    /// Chosen so that the squared norm of a gradient equals the energy.
    pub fn edge_measure(&self) -> f64 {
        1.0 / self.energy_prefactor()
    }

    /// Scale (3/2)*5^N of the renormalized Laplacian; 1 on generic graphs.
    pub fn laplacian_scale(&self) -> f64 {
        match self.level {
            Some(n) => 1.5 * 5.0f64.powi(n as i32),
            None => 1.0,
        }
    }

    /// Vertex weight of the discrete Gauss-Green formula, (2/3)*3^{-N} on
    /// gasket graphs (total mass 1 + 3^{-N}, converging to the self-similar
    /// probability measure); 1 on generic graphs, where the energy form,
    /// Laplacian and normal derivative are all unscaled.
    pub fn gauss_green_vertex_weight(&self) -> f64 {
        match self.level {
            Some(n) => (2.0 / 3.0) * 3.0f64.powi(-(n as i32)),
            None => 1.0,
        }
    }

    /// Time-change constant between the accelerated particle clock and the
    /// energy-form clock of the lumped weak formulation: the chain relaxes
    /// slower by 3^N / |V_N| (tends to 2/3). 1 on generic graphs.
    pub fn particle_clock_factor(&self) -> f64 {
        match self.level {
            Some(n) => 3.0f64.powi(n as i32) / self.vertex_count() as f64,
            None => 1.0,
        }
    }

    /// Diffusive time acceleration 5^N applied to the particle dynamics.
    pub fn time_acceleration(&self) -> f64 {
        match self.level {
            Some(n) => 5.0f64.powi(n as i32),
            None => 1.0,
        }
    }

    /// Level-N cells as corner triples (gasket graphs only).
    pub fn cells(&self) -> Option<&[[VertexId; 3]]> {
        self.cells.as_deref()
    }

    /// Integer lattice coordinates with denominator 2^N (gasket graphs only).
    pub fn lattice(&self) -> Option<&[(u64, u64)]> {
        self.lattice.as_deref()
    }

    /// Looks up the edge between two vertices, if present.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.incidence[a as usize]
            .iter()
            .find(|&&(w, _)| w == b)
            .map(|&(_, e)| e)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            level: self.level,
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| VertexJson {
                    id: i as VertexId,
                    x: v.x,
                    y: v.y,
                    boundary: v.boundary,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| EdgeJson {
                    id: i as EdgeId,
                    tail: e.tail,
                    head: e.head,
                    conductance: e.conductance,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub level: Option<u32>,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: VertexId,
    pub x: f64,
    pub y: f64,
    pub boundary: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
    pub conductance: f64,
}

/// Closed-form vertex count (3^(N+1) + 3) / 2.
pub fn sg_vertex_count(level: u32) -> Result<usize> {
    let pow = 3usize
        .checked_pow(level + 1)
        .ok_or(Error::LevelTooLarge { level, max: SG_MAX_LEVEL })?;
    Ok((pow + 3) / 2)
}

/// Closed-form edge count 3^(N+1).
pub fn sg_edge_count(level: u32) -> Result<usize> {
    3usize
        .checked_pow(level + 1)
        .ok_or(Error::LevelTooLarge { level, max: SG_MAX_LEVEL })
}

/// Builds the level-N gasket graph with unit conductances.
///
/// Corners sit at a0 = (0, 0), a1 = (1, 0), a2 = (1/2, sqrt(3)/2) and form
/// the boundary. Vertex ids are assigned in lexicographic order of the planar
/// coordinates, which is reproducible because the underlying lattice is exact.
pub fn build_sg(level: u32) -> Result<WeightedGraph> {
    if level > SG_MAX_LEVEL || 3u64.checked_pow(level + 1).is_none_or(|e| e > u32::MAX as u64) {
        return Err(Error::LevelTooLarge { level, max: SG_MAX_LEVEL });
    }

    // Cells as integer corner triples at denominator 2^level. Corner order
    // within a cell follows the corner directions a0, a1, a2.
    let mut cells: Vec<[(u64, u64); 3]> = vec![[(0, 0), (1, 0), (0, 1)]];
    for k in 1..=level {
        let shift = 1u64 << (k - 1);
        let anchors = [(0u64, 0u64), (shift, 0), (0, shift)];
        let mut next = Vec::with_capacity(cells.len() * 3);
        for &(du, dv) in &anchors {
            for cell in &cells {
                next.push([
                    (cell[0].0 + du, cell[0].1 + dv),
                    (cell[1].0 + du, cell[1].1 + dv),
                    (cell[2].0 + du, cell[2].1 + dv),
                ]);
            }
        }
        cells = next;
    }

    // Deterministic vertex indexing: lexicographic in (x, y), which on the
    // lattice is lexicographic in (2u + v, v).
    let mut coords: Vec<(u64, u64)> = cells.iter().flatten().copied().collect();
    coords.sort_by_key(|&(u, v)| (2 * u + v, v));
    coords.dedup();

    let scale = (1u64 << level) as f64;
    let side = 1u64 << level;
    let index_of = |p: (u64, u64)| -> VertexId {
        coords
            .binary_search_by_key(&(2 * p.0 + p.1, p.1), |&(u, v)| (2 * u + v, v))
            .expect("cell corner must be a vertex") as VertexId
    };

    let vertices: Vec<Vertex> = coords
        .iter()
        .map(|&(u, v)| Vertex {
            x: (u as f64 + v as f64 / 2.0) / scale,
            y: v as f64 * (3.0f64.sqrt() / 2.0) / scale,
            boundary: (u, v) == (0, 0) || (u, v) == (side, 0) || (u, v) == (0, side),
        })
        .collect();

    let mut edge_pairs: Vec<(VertexId, VertexId)> = Vec::with_capacity(cells.len() * 3);
    let mut cell_ids: Vec<[VertexId; 3]> = Vec::with_capacity(cells.len());
    for cell in &cells {
        let ids = [index_of(cell[0]), index_of(cell[1]), index_of(cell[2])];
        cell_ids.push(ids);
        for (a, b) in [(ids[0], ids[1]), (ids[0], ids[2]), (ids[1], ids[2])] {
            edge_pairs.push(if a < b { (a, b) } else { (b, a) });
        }
    }
    edge_pairs.sort();
    debug_assert!(edge_pairs.windows(2).all(|w| w[0] != w[1]), "cells share vertices, never edges");

    let edges: Vec<Edge> = edge_pairs
        .into_iter()
        .map(|(tail, head)| Edge { tail, head, conductance: 1.0 })
        .collect();

    debug_assert_eq!(vertices.len(), sg_vertex_count(level)?);
    debug_assert_eq!(edges.len(), sg_edge_count(level)?);

    WeightedGraph::assemble(vertices, edges, Some(level), Some(coords), Some(cell_ids))
}

/// Maps each vertex of the level-N graph to its id in the level-(N+1) graph.
/// Lattice coordinates simply double.
pub fn sg_embedding(coarse: &WeightedGraph, fine: &WeightedGraph) -> Result<Vec<VertexId>> {
    match (coarse.level(), fine.level()) {
        (Some(c), Some(f)) if f == c + 1 => {}
        _ => {
            return Err(Error::InvalidInput(
                "embedding requires gasket graphs at consecutive levels".into(),
            ))
        }
    }
    let coarse_lat = coarse.lattice().expect("gasket graph has lattice");
    let fine_lat = fine.lattice().expect("gasket graph has lattice");
    coarse_lat
        .iter()
        .map(|&(u, v)| {
            fine_lat
                .binary_search_by_key(&(2 * (2 * u) + 2 * v, 2 * v), |&(a, b)| (2 * a + b, b))
                .map(|i| i as VertexId)
                .map_err(|_| Error::InvalidInput("coarse vertex missing at the finer level".into()))
        })
        .collect()
}

/// Harmonic extension of vertex data from level N to level N+1.
///
/// Within each level-N cell with corner values (A, B, C), the new midpoint
/// opposite C takes (2A + 2B + C) / 5; this is the interpolation that leaves
/// the renormalized energy unchanged.
pub fn harmonic_extension(
    coarse: &WeightedGraph,
    fine: &WeightedGraph,
    f: &VertexFunction,
) -> Result<VertexFunction> {
    f.check_len(coarse, "harmonic_extension input")?;
    let map = sg_embedding(coarse, fine)?;
    let fine_lat = fine.lattice().expect("gasket graph has lattice");
    let coarse_lat = coarse.lattice().expect("gasket graph has lattice");
    let find_fine = |p: (u64, u64)| -> VertexId {
        fine_lat
            .binary_search_by_key(&(2 * p.0 + p.1, p.1), |&(a, b)| (2 * a + b, b))
            .expect("midpoint must exist at the finer level") as VertexId
    };

    let mut out = VertexFunction::zeros(fine.vertex_count());
    for (coarse_id, &fine_id) in map.iter().enumerate() {
        out[fine_id] = f[coarse_id as VertexId];
    }
    let cells = coarse
        .cells()
        .ok_or_else(|| Error::InvalidInput("harmonic extension requires gasket cells".into()))?;
    for cell in cells {
        let vals = [f[cell[0]], f[cell[1]], f[cell[2]]];
        let lat = [
            coarse_lat[cell[0] as usize],
            coarse_lat[cell[1] as usize],
            coarse_lat[cell[2] as usize],
        ];
        // Midpoint between corners i and j, harmonic value (2x_i + 2x_j + x_k)/5.
        for (i, j, k) in [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)] {
            let mid = (lat[i].0 + lat[j].0, lat[i].1 + lat[j].1);
            let id = find_fine(mid);
            out[id] = (2.0 * vals[i] + 2.0 * vals[j] + vals[k]) / 5.0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_closed_forms() {
        for n in 0..=6 {
            let g = build_sg(n).unwrap();
            assert_eq!(g.vertex_count(), sg_vertex_count(n).unwrap(), "level {n}");
            assert_eq!(g.edge_count(), sg_edge_count(n).unwrap(), "level {n}");
            assert_eq!(g.boundary().len(), 3);
        }
        let g = build_sg(0).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 3));
        let g = build_sg(1).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (6, 9));
        let g = build_sg(2).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (15, 27));
    }

    #[test]
    fn rejects_oversized_level() {
        let err = build_sg(SG_MAX_LEVEL + 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("19"), "limit should be reported: {msg}");
    }

    #[test]
    fn corners_are_boundary() {
        let g = build_sg(3).unwrap();
        let b = g.boundary();
        assert_eq!(b.len(), 3);
        let coords: Vec<(f64, f64)> = b
            .iter()
            .map(|&v| (g.vertices()[v as usize].x, g.vertices()[v as usize].y))
            .collect();
        assert!(coords.contains(&(0.0, 0.0)));
        assert!(coords.contains(&(1.0, 0.0)));
        let top = coords.iter().any(|&(x, y)| (x - 0.5).abs() < 1e-15 && y > 0.8);
        assert!(top);
    }

    #[test]
    fn interior_degree_is_four() {
        let g = build_sg(3).unwrap();
        for &v in g.interior() {
            assert_eq!(g.neighbors(v).len(), 4);
        }
        for &v in g.boundary() {
            assert_eq!(g.neighbors(v).len(), 2);
        }
    }

    #[test]
    fn orientation_tail_below_head() {
        let g = build_sg(2).unwrap();
        for e in g.edges() {
            assert!(e.tail < e.head);
        }
    }

    #[test]
    fn deterministic_indexing() {
        let a = build_sg(3).unwrap();
        let b = build_sg(3).unwrap();
        let ja = serde_json::to_string(&a.to_json()).unwrap();
        let jb = serde_json::to_string(&b.to_json()).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn embedding_nests_levels() {
        let g1 = build_sg(1).unwrap();
        let g2 = build_sg(2).unwrap();
        let map = sg_embedding(&g1, &g2).unwrap();
        assert_eq!(map.len(), g1.vertex_count());
        for (c, &f) in map.iter().enumerate() {
            let vc = &g1.vertices()[c];
            let vf = &g2.vertices()[f as usize];
            assert!((vc.x - vf.x).abs() < 1e-15 && (vc.y - vf.y).abs() < 1e-15);
        }
    }

    #[test]
    fn generic_graph_rejects_bad_input() {
        assert!(WeightedGraph::new(vec![(0.0, 0.0); 2], vec![(0, 0, 1.0)], vec![]).is_err());
        assert!(WeightedGraph::new(vec![(0.0, 0.0); 2], vec![(0, 1, 0.0)], vec![]).is_err());
        assert!(WeightedGraph::new(
            vec![(0.0, 0.0); 2],
            vec![(0, 1, 1.0), (1, 0, 2.0)],
            vec![]
        )
        .is_err());
        // disconnected
        assert!(WeightedGraph::new(vec![(0.0, 0.0); 3], vec![(0, 1, 1.0)], vec![]).is_err());
    }
}
