//! Dense generator oracle for small graphs.
//!
//! On a graph with |V| <= 12 the full Markov generator on {0,1}^V fits in
//! memory, so stationarity, occupation profiles and current rates can be
//! computed by exact linear algebra and used as ground truth for the
//! stochastic simulator. The generator here is unaccelerated; the diffusive
//! speedup is a pure time change and callers pass it where a rate (per unit
//! macroscopic time) is required.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::VertexFunction;
use crate::graph::WeightedGraph;
use crate::linalg::solve_dense;
use crate::wasep::BoundaryRates;

pub const MAX_ORACLE_VERTICES: usize = 12;

/// Exact generator matrix of the boundary-driven exclusion process with a
/// frozen tilt profile. Row s, column s' holds the rate of s -> s'; rows sum
/// to zero. States are bitmasks with vertex v at bit v.
pub fn generator_matrix(
    g: &WeightedGraph,
    h: Option<&VertexFunction>,
    rates: Option<&BoundaryRates>,
) -> Result<DMatrix<f64>> {
    let n = g.vertex_count();
    if n > MAX_ORACLE_VERTICES {
        return Err(Error::StateSpaceTooLarge { vertices: n, max: MAX_ORACLE_VERTICES });
    }
    if let Some(h) = h {
        h.check_len(g, "generator tilt")?;
    }
    let states = 1usize << n;
    let mut gen = DMatrix::zeros(states, states);
    for s in 0..states {
        for e in g.edges() {
            let (x, y) = (e.tail as usize, e.head as usize);
            let bx = (s >> x) & 1;
            let by = (s >> y) & 1;
            if bx == by {
                continue; // exchange is the identity; contributes nothing
            }
            let rate = match h {
                None => e.conductance,
                Some(h) => {
                    let d_eta = by as f64 - bx as f64;
                    let d_h = h[e.tail] - h[e.head];
                    e.conductance * (0.5 * d_eta * d_h).exp()
                }
            };
            let t = s ^ (1 << x) ^ (1 << y);
            gen[(s, t)] += rate;
            gen[(s, s)] -= rate;
        }
        if let Some(rates) = rates {
            for (k, &a) in rates.vertices().iter().enumerate() {
                let occupied = (s >> a as usize) & 1 == 1;
                let rate = if occupied { rates.minus(k) } else { rates.plus(k) };
                let t = s ^ (1 << a as usize);
                gen[(s, t)] += rate;
                gen[(s, s)] -= rate;
            }
        }
    }
    Ok(gen)
}

/// Stationary distribution: the probability vector pi with pi L = 0.
pub fn stationary_distribution(generator: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = generator.nrows();
    // Replace one balance equation with the normalization sum pi = 1.
    let mut a = generator.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = solve_dense(a, b)?;
    Ok(pi)
}

/// Occupation expectations E[eta(x)] under a distribution on {0,1}^V.
pub fn occupation_expectations(g: &WeightedGraph, pi: &DVector<f64>) -> VertexFunction {
    let n = g.vertex_count();
    let mut out = VertexFunction::zeros(n);
    for s in 0..pi.len() {
        let p = pi[s];
        if p == 0.0 {
            continue;
        }
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros();
            out[v] += p;
            bits &= bits - 1;
        }
    }
    out
}

/// Expected growth rate of the integrated-current pairing
/// `accel^{-1} * d/dt E<W_t, grad F>` evaluated under `pi`, then multiplied
/// by `accel`: per oriented edge the current grows at
/// `accel * c * (E[eta_x (1-eta_y) psi+] - E[eta_y (1-eta_x) psi-])`.
pub fn current_pairing_rate(
    g: &WeightedGraph,
    pi: &DVector<f64>,
    h: Option<&VertexFunction>,
    f: &VertexFunction,
    accel: f64,
) -> Result<f64> {
    f.check_len(g, "current_pairing_rate")?;
    let pairing_weight = 1.0 / g.time_acceleration(); // 5^{-N}
    let grad_scale = g.energy_prefactor();
    let mut total = 0.0;
    for e in g.edges() {
        let (x, y) = (e.tail as usize, e.head as usize);
        let (psi_fwd, psi_bwd) = match h {
            None => (1.0, 1.0),
            Some(h) => {
                let d_h = h[e.tail] - h[e.head];
                // particle x -> y has d_eta = -1, y -> x has d_eta = +1
                ((0.5 * d_h).exp().recip(), (0.5 * d_h).exp())
            }
        };
        let mut fwd = 0.0; // P(eta_x = 1, eta_y = 0)
        let mut bwd = 0.0;
        for s in 0..pi.len() {
            let bx = (s >> x) & 1;
            let by = (s >> y) & 1;
            if bx == 1 && by == 0 {
                fwd += pi[s];
            } else if bx == 0 && by == 1 {
                bwd += pi[s];
            }
        }
        let growth = accel * e.conductance * (fwd * psi_fwd - bwd * psi_bwd);
        let grad_f = grad_scale * (f[e.head] - f[e.tail]);
        total += pairing_weight * growth * grad_f;
    }
    Ok(total)
}
