//! Time-gridded density-current trajectories.
//!
//! A trajectory pairs a density profile and an integrated current on a common
//! time grid. Simulation trajectories keep the exact integer ledger alongside
//! the normalized current `W / |V|`, so conservation can be checked in integer
//! arithmetic; solver trajectories carry the accumulated flux directly.

use crate::error::{Error, Result};
use crate::fields::{EdgeFunction, VertexFunction};
use crate::graph::WeightedGraph;
use crate::pde::PdeTrajectory;
use crate::wasep::{Configuration, Snapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Simulation,
    Pde,
    Synthetic,
}

/// Integer bookkeeping of a simulation trajectory.
#[derive(Clone, Debug)]
pub struct SimLedger {
    pub eta0: Vec<u8>,
    pub eta: Vec<Vec<u8>>,
    pub current: Vec<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rho: Vec<VertexFunction>,
    /// Integrated current in edge-function units.
    pub current: Vec<EdgeFunction>,
    pub provenance: Provenance,
    pub ledger: Option<SimLedger>,
}

impl Trajectory {
    fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidTrajectory("empty time grid".into()));
        }
        if !self.times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidTrajectory("times must be strictly increasing".into()));
        }
        if self.rho.len() != self.times.len() || self.current.len() != self.times.len() {
            return Err(Error::GridMismatch(format!(
                "{} times, {} density profiles, {} currents",
                self.times.len(),
                self.rho.len(),
                self.current.len()
            )));
        }
        for r in &self.rho {
            r.check_len(g, "trajectory density")?;
        }
        for w in &self.current {
            w.check_len(g, "trajectory current")?;
        }
        if self.current[0].values().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidTrajectory(
                "integrated current must vanish at the initial time".into(),
            ));
        }
        Ok(())
    }

    /// Wraps a solver output (already on the full grid).
    pub fn from_pde(g: &WeightedGraph, traj: &PdeTrajectory) -> Result<Self> {
        let out = Self {
            times: traj.times.clone(),
            rho: traj.rho.clone(),
            current: traj.flux.clone(),
            provenance: Provenance::Pde,
            ledger: None,
        };
        out.validate(g)?;
        Ok(out)
    }

    /// Builds from simulation snapshots; the first snapshot must be at the
    /// initial time with zero currents. The normalized current is `W / |V|`.
    pub fn from_snapshots(
        g: &WeightedGraph,
        eta0: &Configuration,
        snapshots: &[Snapshot],
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidTrajectory("no snapshots".into()));
        }
        let n = g.vertex_count() as f64;
        let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
        let rho: Vec<VertexFunction> = snapshots
            .iter()
            .map(|s| VertexFunction::from_vec(s.eta.iter().map(|&b| b as f64).collect()))
            .collect();
        let current: Vec<EdgeFunction> = snapshots
            .iter()
            .map(|s| EdgeFunction::from_vec(s.current.iter().map(|&w| w as f64 / n).collect()))
            .collect();
        let out = Self {
            times,
            rho,
            current,
            provenance: Provenance::Simulation,
            ledger: Some(SimLedger {
                eta0: eta0.bits().to_vec(),
                eta: snapshots.iter().map(|s| s.eta.clone()).collect(),
                current: snapshots.iter().map(|s| s.current.clone()).collect(),
            }),
        };
        out.validate(g)?;
        Ok(out)
    }

    pub fn synthetic(
        g: &WeightedGraph,
        times: Vec<f64>,
        rho: Vec<VertexFunction>,
        current: Vec<EdgeFunction>,
    ) -> Result<Self> {
        let out = Self { times, rho, current, provenance: Provenance::Synthetic, ledger: None };
        out.validate(g)?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
