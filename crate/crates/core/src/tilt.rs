//! External tilt fields H(t, x).
//!
//! A [`FieldSpec`] is a tilt together with a declared bound `M_H` on the
//! per-edge gap sup_{t, xy} |H_t(x) - H_t(y)| and a time horizon. The bound
//! feeds the constant thinning envelope of the simulator, so builders compute
//! it exactly for every built-in shape rather than trusting the caller.

use serde::{Deserialize, Serialize};

use crate::calculus::solve_harmonic;
use crate::error::{Error, Result};
use crate::fields::VertexFunction;
use crate::graph::{VertexId, WeightedGraph};

/// Scalar time profile g(t) multiplying a fixed spatial profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeShape {
    /// g(t) = 1
    Const,
    /// g(t) = t / T
    Ramp,
    /// g(t) = sin(2 pi t / T)
    Sine,
}

impl TimeShape {
    fn value(self, t: f64, horizon: f64) -> f64 {
        match self {
            TimeShape::Const => 1.0,
            TimeShape::Ramp => {
                if horizon > 0.0 {
                    t / horizon
                } else {
                    0.0
                }
            }
            TimeShape::Sine => {
                if horizon > 0.0 {
                    (2.0 * std::f64::consts::PI * t / horizon).sin()
                } else {
                    0.0
                }
            }
        }
    }

    fn max_abs(self) -> f64 {
        1.0
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Zero,
    /// Fixed spatial profile times a scalar shape in t.
    Profile { profile: VertexFunction, shape: TimeShape },
    /// Piecewise-linear interpolation in t between tabulated vertex profiles.
    Table { times: Vec<f64>, profiles: Vec<VertexFunction> },
}

/// Tilt field with its declared edge-gap bound and horizon.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    kind: Kind,
    vertex_count: usize,
    m_h: f64,
    horizon: f64,
}

impl FieldSpec {
    pub fn zero(g: &WeightedGraph, horizon: f64) -> Self {
        Self { kind: Kind::Zero, vertex_count: g.vertex_count(), m_h: 0.0, horizon }
    }

    /// Spatial profile = harmonic interpolation of the three corner values,
    /// multiplied by the time shape.
    pub fn harmonic(
        g: &WeightedGraph,
        corners: [f64; 3],
        shape: TimeShape,
        horizon: f64,
    ) -> Result<Self> {
        let bv = crate::calculus::corner_values(g, corners)?;
        let profile = solve_harmonic(g, &bv)?;
        Ok(Self::from_profile(g, profile, shape, horizon))
    }

    /// Arbitrary spatial profile multiplied by the time shape.
    pub fn from_profile(
        g: &WeightedGraph,
        profile: VertexFunction,
        shape: TimeShape,
        horizon: f64,
    ) -> Self {
        let m_h = max_edge_gap(g, &profile) * shape.max_abs();
        Self {
            kind: Kind::Profile { profile, shape },
            vertex_count: g.vertex_count(),
            m_h,
            horizon,
        }
    }

    /// Tabulated profiles with linear interpolation in time. Times must be
    /// strictly increasing and cover t = 0.
    pub fn table(
        g: &WeightedGraph,
        times: Vec<f64>,
        profiles: Vec<VertexFunction>,
        horizon: f64,
    ) -> Result<Self> {
        if times.len() != profiles.len() || times.is_empty() {
            return Err(Error::InvalidInput("table requires one profile per time".into()));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("table times must be strictly increasing".into()));
        }
        for p in &profiles {
            p.check_len(g, "tilt table profile")?;
        }
        // Linear interpolation: the gap bound is attained at table rows.
        let m_h = profiles.iter().map(|p| max_edge_gap(g, p)).fold(0.0, f64::max);
        Ok(Self {
            kind: Kind::Table { times, profiles },
            vertex_count: g.vertex_count(),
            m_h,
            horizon,
        })
    }

    /// Declared bound on sup |H_t(x) - H_t(y)| over edges and times.
    pub fn edge_gap_bound(&self) -> f64 {
        self.m_h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// H(t, x).
    pub fn value(&self, t: f64, x: VertexId) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Profile { profile, shape } => profile[x] * shape.value(t, self.horizon),
            Kind::Table { times, profiles } => {
                let (lo, hi, w) = bracket(times, t);
                (1.0 - w) * profiles[lo][x] + w * profiles[hi][x]
            }
        }
    }

    /// The full vertex profile at time t.
    pub fn profile_at(&self, t: f64) -> VertexFunction {
        match &self.kind {
            Kind::Zero => VertexFunction::zeros(self.vertex_count),
            Kind::Profile { profile, shape } => {
                let s = shape.value(t, self.horizon);
                VertexFunction::from_vec(profile.values().iter().map(|v| v * s).collect())
            }
            Kind::Table { times, profiles } => {
                let (lo, hi, w) = bracket(times, t);
                VertexFunction::from_vec(
                    profiles[lo]
                        .values()
                        .iter()
                        .zip(profiles[hi].values())
                        .map(|(a, b)| (1.0 - w) * a + w * b)
                        .collect(),
                )
            }
        }
    }
}

fn bracket(times: &[f64], t: f64) -> (usize, usize, f64) {
    if t <= times[0] {
        return (0, 0, 0.0);
    }
    if t >= *times.last().unwrap() {
        let k = times.len() - 1;
        return (k, k, 0.0);
    }
    let hi = times.partition_point(|&s| s <= t);
    let lo = hi - 1;
    let w = (t - times[lo]) / (times[hi] - times[lo]);
    (lo, hi, w)
}

fn max_edge_gap(g: &WeightedGraph, profile: &VertexFunction) -> f64 {
    g.edges()
        .iter()
        .map(|e| (profile[e.head] - profile[e.tail]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_sg;

    #[test]
    fn zero_field() {
        let g = build_sg(1).unwrap();
        let f = FieldSpec::zero(&g, 1.0);
        assert_eq!(f.edge_gap_bound(), 0.0);
        assert_eq!(f.value(0.3, 2), 0.0);
    }

    #[test]
    fn harmonic_profile_gap_bound_is_exact() {
        let g = build_sg(2).unwrap();
        let f = FieldSpec::harmonic(&g, [1.0, 0.0, 0.0], TimeShape::Const, 1.0).unwrap();
        let mut max_gap = 0.0f64;
        for e in g.edges() {
            let gap = (f.value(0.5, e.head) - f.value(0.5, e.tail)).abs();
            max_gap = max_gap.max(gap);
        }
        assert!(max_gap <= f.edge_gap_bound() + 1e-15);
        assert!(f.edge_gap_bound() > 0.0);
    }

    #[test]
    fn table_interpolates_linearly() {
        let g = build_sg(0).unwrap();
        let p0 = VertexFunction::from_vec(vec![0.0, 0.0, 0.0]);
        let p1 = VertexFunction::from_vec(vec![1.0, 2.0, 3.0]);
        let f = FieldSpec::table(&g, vec![0.0, 2.0], vec![p0, p1], 2.0).unwrap();
        assert_eq!(f.value(1.0, 2), 1.5);
        assert_eq!(f.value(5.0, 2), 3.0);
        assert_eq!(f.edge_gap_bound(), 2.0);
    }

    #[test]
    fn sine_shape_modulates() {
        let g = build_sg(0).unwrap();
        let p = VertexFunction::from_vec(vec![1.0, 0.0, 0.0]);
        let f = FieldSpec::from_profile(&g, p, TimeShape::Sine, 4.0);
        assert!((f.value(1.0, 0) - 1.0).abs() < 1e-12); // sin(pi/2)
        assert!(f.value(0.0, 0).abs() < 1e-12);
    }
}
