//! Discrete calculus on weighted graphs.
//!
//! On a gasket graph at level N the energy form carries the renormalization
//! (5/3)^N, the gradient carries the same factor, and the edge inner product
//! carries the inverse weight (3/5)^N so that the squared gradient norm
//! reproduces the energy exactly. The divergence is the adjoint of the
//! gradient between the edge inner product and the uniform vertex inner
//! product (1/|V|) sum. On generic graphs all prefactors are 1.
//!
//! Sign conventions, fixed once:
//!   gradient     (grad f)(x->y) = s * (f(y) - f(x)),            s = (5/3)^N
//!   divergence   (div t)(x)     = -|V| * sum_{e at x} sigma(e, x) c_e t(e),
//!                                 sigma = +1 when x is the tail
//!   adjointness  <grad f, t>_E = <f, div t>_V  for all f, t
//! so `div(grad f)` is positive semidefinite while the renormalized Laplacian
//! is negative semidefinite; heat flow is `d rho/dt = lap rho`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fields::{EdgeFunction, VertexFunction};
use crate::graph::{VertexId, WeightedGraph};
use crate::linalg::{SpdSolver, SymCsr};

/// Renormalized Dirichlet energy of `f`, (5/3)^N sum_e c_e (f(x) - f(y))^2.
pub fn graph_energy(g: &WeightedGraph, f: &VertexFunction) -> Result<f64> {
    graph_energy_bilinear(g, f, f)
}

/// Bilinear polarization of the energy form.
pub fn graph_energy_bilinear(
    g: &WeightedGraph,
    f: &VertexFunction,
    h: &VertexFunction,
) -> Result<f64> {
    f.check_len(g, "graph_energy")?;
    h.check_len(g, "graph_energy")?;
    let mut acc = 0.0;
    for e in g.edges() {
        let df = f[e.head] - f[e.tail];
        let dh = h[e.head] - h[e.tail];
        acc += e.conductance * df * dh;
    }
    Ok(g.energy_prefactor() * acc)
}

/// Discrete gradient along the fixed orientation.
pub fn discrete_gradient(g: &WeightedGraph, f: &VertexFunction) -> Result<EdgeFunction> {
    f.check_len(g, "discrete_gradient")?;
    let s = g.energy_prefactor();
    Ok(EdgeFunction::from_vec(
        g.edges().iter().map(|e| s * (f[e.head] - f[e.tail])).collect(),
    ))
}

/// Edge inner product (3/5)^N sum_e c_e a(e) b(e).
pub fn edge_inner_product(g: &WeightedGraph, a: &EdgeFunction, b: &EdgeFunction) -> Result<f64> {
    a.check_len(g, "edge_inner_product")?;
    b.check_len(g, "edge_inner_product")?;
    let w = g.edge_measure();
    let mut acc = 0.0;
    for (i, e) in g.edges().iter().enumerate() {
        acc += e.conductance * a.values()[i] * b.values()[i];
    }
    Ok(w * acc)
}

/// Uniform vertex inner product (1/|V|) sum_x u(x) v(x).
pub fn vertex_inner_product(g: &WeightedGraph, u: &VertexFunction, v: &VertexFunction) -> Result<f64> {
    u.check_len(g, "vertex_inner_product")?;
    v.check_len(g, "vertex_inner_product")?;
    let acc: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
    Ok(acc / g.vertex_count() as f64)
}

/// Divergence, the adjoint of [`discrete_gradient`]:
/// `<grad f, t>_E = <f, div t>_V` for every f and t.
pub fn discrete_divergence(g: &WeightedGraph, theta: &EdgeFunction) -> Result<VertexFunction> {
    theta.check_len(g, "discrete_divergence")?;
    let n = g.vertex_count() as f64;
    let mut out = VertexFunction::zeros(g.vertex_count());
    for (i, e) in g.edges().iter().enumerate() {
        let flow = e.conductance * theta.values()[i];
        // sigma = +1 at the tail, -1 at the head
        out[e.tail] -= n * flow;
        out[e.head] += n * flow;
    }
    Ok(out)
}

/// Renormalized graph Laplacian (3/2) 5^N sum_{y ~ x} c_xy (f(y) - f(x)).
///
/// `apply` keeps identity rows at boundary vertices; Dirichlet or Neumann
/// handling is the caller's choice via the boundary mask.
pub struct Laplacian<'g> {
    g: &'g WeightedGraph,
    scale: f64,
}

impl<'g> Laplacian<'g> {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Applies the operator; boundary rows return `f` unchanged.
    pub fn apply(&self, f: &VertexFunction) -> Result<VertexFunction> {
        f.check_len(self.g, "laplacian")?;
        let mut out = self.apply_everywhere(f)?;
        for &a in self.g.boundary() {
            out[a] = f[a];
        }
        Ok(out)
    }

    /// Applies the second-difference formula at every vertex, including the
    /// boundary (useful for Gauss-Green bookkeeping).
    pub fn apply_everywhere(&self, f: &VertexFunction) -> Result<VertexFunction> {
        f.check_len(self.g, "laplacian")?;
        let mut out = VertexFunction::zeros(self.g.vertex_count());
        for e in self.g.edges() {
            let d = e.conductance * (f[e.head] - f[e.tail]);
            out[e.tail] += self.scale * d;
            out[e.head] -= self.scale * d;
        }
        Ok(out)
    }

    /// Maximum absolute value over interior vertices, a harmonicity residual.
    pub fn interior_residual(&self, f: &VertexFunction) -> Result<f64> {
        let v = self.apply_everywhere(f)?;
        Ok(self
            .g
            .interior()
            .iter()
            .map(|&x| v[x].abs())
            .fold(0.0, f64::max))
    }
}

pub fn renormalized_laplacian(g: &WeightedGraph) -> Laplacian<'_> {
    Laplacian { g, scale: g.laplacian_scale() }
}

/// Boundary data for Dirichlet problems.
pub type BoundaryValues = BTreeMap<VertexId, f64>;

/// Boundary data on a gasket graph from the three corner values, in corner
/// order a0, a1, a2.
pub fn corner_values(g: &WeightedGraph, values: [f64; 3]) -> Result<BoundaryValues> {
    if g.boundary().len() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected 3 boundary vertices, found {}",
            g.boundary().len()
        )));
    }
    Ok(g.boundary().iter().copied().zip(values).collect())
}

fn check_boundary_values(g: &WeightedGraph, values: &BoundaryValues) -> Result<()> {
    if values.len() != g.boundary().len()
        || !g.boundary().iter().all(|a| values.contains_key(a))
    {
        return Err(Error::InvalidInput(
            "boundary data must assign exactly one value to each boundary vertex".into(),
        ));
    }
    Ok(())
}

/// Interior stiffness assembly for `sum_y c_xy (f(x) - f(y))`, with the
/// boundary columns moved to the right-hand side.
fn assemble_interior_system(
    g: &WeightedGraph,
    values: &BoundaryValues,
) -> (Vec<i64>, SymCsr, Vec<f64>) {
    let n = g.vertex_count();
    let mut pos = vec![-1i64; n];
    for (k, &x) in g.interior().iter().enumerate() {
        pos[x as usize] = k as i64;
    }
    let m = g.interior().len();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; m];
    for e in g.edges() {
        let (a, b, c) = (e.tail, e.head, e.conductance);
        let (pa, pb) = (pos[a as usize], pos[b as usize]);
        match (pa >= 0, pb >= 0) {
            (true, true) => {
                triplets.push((pa as u32, pa as u32, c));
                triplets.push((pb as u32, pb as u32, c));
                triplets.push((pa as u32, pb as u32, -c));
                triplets.push((pb as u32, pa as u32, -c));
            }
            (true, false) => {
                triplets.push((pa as u32, pa as u32, c));
                rhs[pa as usize] += c * values[&b];
            }
            (false, true) => {
                triplets.push((pb as u32, pb as u32, c));
                rhs[pb as usize] += c * values[&a];
            }
            (false, false) => {}
        }
    }
    (pos, SymCsr::from_triplets(m, triplets), rhs)
}

/// Unique function harmonic at interior vertices with the given boundary data.
pub fn solve_harmonic(g: &WeightedGraph, values: &BoundaryValues) -> Result<VertexFunction> {
    check_boundary_values(g, values)?;
    if g.interior().is_empty() {
        let mut f = VertexFunction::zeros(g.vertex_count());
        for (&a, &v) in values {
            f[a] = v;
        }
        return Ok(f);
    }
    let (pos, mat, rhs) = assemble_interior_system(g, values);
    let solver = SpdSolver::new(mat, 1e-12)?;
    let sol = solver.solve(&rhs)?;
    let mut f = VertexFunction::zeros(g.vertex_count());
    for (&a, &v) in values {
        f[a] = v;
    }
    for x in 0..g.vertex_count() {
        if pos[x] >= 0 {
            f[x as u32] = sol[pos[x] as usize];
        }
    }
    // The harmonic solve is the backbone of everything downstream; insist on
    // a tight relative residual.
    let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let lap = renormalized_laplacian(g);
    let resid = lap.interior_residual(&f)? / lap.scale();
    if resid > 1e-10 * scale {
        return Err(Error::SolveFailed { residual: resid / scale, iterations: 0, tolerance: 1e-10 });
    }
    Ok(f)
}

/// Effective resistance between two vertices, from a unit-current Dirichlet
/// solve on the raw conductances (no level renormalization).
pub fn effective_resistance(g: &WeightedGraph, x: VertexId, y: VertexId) -> Result<f64> {
    if x == y {
        return Err(Error::InvalidInput("effective resistance requires x != y".into()));
    }
    let n = g.vertex_count();
    if x as usize >= n || y as usize >= n {
        return Err(Error::InvalidInput("vertex out of range".into()));
    }
    // Ground y, inject unit current at x: solve the reduced Laplacian.
    let mut pos = vec![-1i64; n];
    let mut k = 0usize;
    for v in 0..n {
        if v != y as usize {
            pos[v] = k as i64;
            k += 1;
        }
    }
    let mut triplets = Vec::new();
    for e in g.edges() {
        let (a, b, c) = (e.tail as usize, e.head as usize, e.conductance);
        let (pa, pb) = (pos[a], pos[b]);
        if pa >= 0 {
            triplets.push((pa as u32, pa as u32, c));
        }
        if pb >= 0 {
            triplets.push((pb as u32, pb as u32, c));
        }
        if pa >= 0 && pb >= 0 {
            triplets.push((pa as u32, pb as u32, -c));
            triplets.push((pb as u32, pa as u32, -c));
        }
    }
    let mut rhs = vec![0.0; n - 1];
    rhs[pos[x as usize] as usize] = 1.0;
    let solver = SpdSolver::new(SymCsr::from_triplets(n - 1, triplets), 1e-12)?;
    let sol = solver.solve(&rhs)?;
    Ok(sol[pos[x as usize] as usize])
}

/// Renormalized normal derivative at a boundary vertex,
/// (5/3)^N sum_{y ~ a} c_ay (f(a) - f(y)).
pub fn normal_derivative(g: &WeightedGraph, f: &VertexFunction, a: VertexId) -> Result<f64> {
    f.check_len(g, "normal_derivative")?;
    if !g.is_boundary(a) {
        return Err(Error::NotBoundary(a));
    }
    let s = g.energy_prefactor();
    let mut acc = 0.0;
    for &(y, e) in g.neighbors(a) {
        acc += g.edge(e).conductance * (f[a] - f[y]);
    }
    Ok(s * acc)
}
