//! Exact continuous-time simulation of the boundary-driven (weakly
//! asymmetric) exclusion process on a weighted graph.
//!
//! Dynamics, run at acceleration `accel` (5^N on a level-N gasket graph):
//!
//! * each edge xy exchanges the occupations of x and y at rate
//!   `c_xy * psi_xy(H_t, eta)` where
//!   `psi_xy = exp((eta(y) - eta(x)) (H_t(x) - H_t(y)) / 2)`.
//!   The half gap per exchange is the convention under which the empirical
//!   current tends to `-grad rho + chi(rho) grad H`, the drift the rest of
//!   the crate is built around. Exchanges between equal occupations are
//!   legitimate events with no effect.
//! * each boundary vertex a flips at rate
//!   `lambda_minus(a) eta(a) + lambda_plus(a) (1 - eta(a))`, fixing the local
//!   density at `rho_bar = lambda_plus / (lambda_plus + lambda_minus)`.
//!
//! Simulation is exact via thinning against a constant envelope
//! `Lambda = accel * (sum_e c_e exp(M_H / 2) + sum_a max(lambda+, lambda-))`:
//! waiting times are Exp(Lambda), a candidate is drawn from a fixed alias
//! table, and the candidate fires with probability true rate at the candidate
//! time over envelope rate. There is no time-discretization error, so long
//! runs can be compared against exact stationary oracles at Monte Carlo
//! accuracy.
//!
//! Every accepted exchange moves one particle across its edge and increments
//! the signed integer current ledger (+1 tail to head). Boundary flips are
//! ledgered separately per boundary vertex; the interior mass conservation
//! law `sum_y W_t(x->y) = -(eta_t(x) - eta_0(x))` then holds exactly in
//! integer arithmetic at all times.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, WeightedAliasIndex};

use crate::error::{Error, Result};
use crate::fields::VertexFunction;
use crate::graph::{EdgeId, VertexId, WeightedGraph};
use crate::tilt::FieldSpec;

/// Occupation variables, one bit per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    occ: Vec<u8>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Self { occ: vec![0; n] }
    }

    pub fn from_bits(occ: Vec<u8>) -> Result<Self> {
        if occ.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("occupations must be 0 or 1".into()));
        }
        Ok(Self { occ })
    }

    /// Independent Bernoulli(rho(x)) occupations.
    pub fn sample_profile(rho: &VertexFunction, rng: &mut ChaCha8Rng) -> Self {
        let occ = rho
            .values()
            .iter()
            .map(|&p| u8::from(rng.gen::<f64>() < p))
            .collect();
        Self { occ }
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn occupied(&self, v: VertexId) -> bool {
        self.occ[v as usize] == 1
    }

    pub fn get(&self, v: VertexId) -> u8 {
        self.occ[v as usize]
    }

    pub fn set(&mut self, v: VertexId, value: u8) {
        debug_assert!(value <= 1);
        self.occ[v as usize] = value;
    }

    pub fn bits(&self) -> &[u8] {
        &self.occ
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&b| b as usize).sum()
    }

    pub fn to_density(&self) -> VertexFunction {
        VertexFunction::from_vec(self.occ.iter().map(|&b| b as f64).collect())
    }
}

/// Birth and death rates at the boundary vertices, in boundary order.
#[derive(Clone, Debug)]
pub struct BoundaryRates {
    vertices: Vec<VertexId>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl BoundaryRates {
    pub fn new(g: &WeightedGraph, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        let b = g.boundary();
        if plus.len() != b.len() || minus.len() != b.len() {
            return Err(Error::InvalidRates(format!(
                "expected one rate pair per boundary vertex ({} vertices)",
                b.len()
            )));
        }
        if plus.iter().chain(minus.iter()).any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidRates("rates must be strictly positive and finite".into()));
        }
        Ok(Self { vertices: b.to_vec(), plus, minus })
    }

    /// Rates pinning density `rho_bar` with total flip intensity `scale`:
    /// lambda+ = scale * rho_bar, lambda- = scale * (1 - rho_bar).
    pub fn from_rho_bar(g: &WeightedGraph, rho_bar: &[f64], scale: f64) -> Result<Self> {
        if rho_bar.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidRates(
                "rho_bar must lie strictly between 0 and 1".into(),
            ));
        }
        let plus = rho_bar.iter().map(|&r| scale * r).collect();
        let minus = rho_bar.iter().map(|&r| scale * (1.0 - r)).collect();
        Self::new(g, plus, minus)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn plus(&self, k: usize) -> f64 {
        self.plus[k]
    }

    pub fn minus(&self, k: usize) -> f64 {
        self.minus[k]
    }

    pub fn rho_bar(&self, k: usize) -> f64 {
        self.plus[k] / (self.plus[k] + self.minus[k])
    }

    pub fn rho_bar_all(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.rho_bar(k)).collect()
    }

    /// Smallest gamma >= 1 with 1/gamma <= lambda+/lambda- <= gamma everywhere.
    pub fn ratio_bound(&self) -> f64 {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(&p, &m)| (p / m).max(m / p))
            .fold(1.0, f64::max)
    }

    fn index_of(&self, a: VertexId) -> Option<usize> {
        self.vertices.iter().position(|&v| v == a)
    }
}

/// Total exchange rate of an edge in the current configuration.
pub fn edge_rate(
    g: &WeightedGraph,
    eta: &Configuration,
    h_t: &VertexFunction,
    edge: EdgeId,
) -> f64 {
    let e = g.edge(edge);
    let d_eta = eta.get(e.head) as f64 - eta.get(e.tail) as f64;
    let d_h = h_t[e.tail] - h_t[e.head];
    e.conductance * (0.5 * d_eta * d_h).exp()
}

/// Flip rate of a boundary vertex: lambda- eta(a) + lambda+ (1 - eta(a)).
pub fn boundary_rate(
    eta: &Configuration,
    a: VertexId,
    rates: &BoundaryRates,
) -> Result<f64> {
    let k = rates
        .index_of(a)
        .ok_or(Error::NotBoundary(a))?;
    Ok(if eta.occupied(a) { rates.minus(k) } else { rates.plus(k) })
}

/// What a single thinning candidate did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    /// Particle moved across the edge; sign +1 means tail to head.
    Swap { edge: EdgeId, sign: i8 },
    /// Exchange accepted between equal occupations; no effect.
    ExchangeNoop { edge: EdgeId },
    /// Boundary flip; `birth` is true when a particle was created.
    Flip { vertex: VertexId, birth: bool },
    /// Candidate rejected by thinning.
    Rejected,
}

/// Mutable simulation state. The clock runs in macroscopic time; the
/// acceleration sits in the event rates.
#[derive(Clone, Debug)]
pub struct SimState {
    pub config: Configuration,
    pub clock: f64,
    /// Net signed particle crossings per edge (+ tail to head).
    pub current: Vec<i64>,
    /// Net signed boundary flips (+ birth) per boundary vertex, in
    /// boundary order.
    pub boundary_flips: Vec<i64>,
    pub rng: ChaCha8Rng,
    pub candidates: u64,
    pub accepted: u64,
}

impl SimState {
    pub fn new(g: &WeightedGraph, eta0: Configuration, rng: ChaCha8Rng) -> Result<Self> {
        if eta0.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch {
                context: "initial configuration",
                expected: g.vertex_count(),
                got: eta0.len(),
            });
        }
        Ok(Self {
            config: eta0,
            clock: 0.0,
            current: vec![0; g.edge_count()],
            boundary_flips: vec![0; g.boundary().len()],
            rng,
            candidates: 0,
            accepted: 0,
        })
    }
}

/// State snapshot at a sample time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub eta: Vec<u8>,
    pub current: Vec<i64>,
    pub boundary_flips: Vec<i64>,
}

/// Immutable event machinery for one (graph, rates, field, accel) tuple.
pub struct Simulator<'a> {
    g: &'a WeightedGraph,
    rates: &'a BoundaryRates,
    field: &'a FieldSpec,
    accel: f64,
    /// Envelope factor exp(M_H / 2) for every edge.
    edge_envelope: f64,
    /// Per-boundary-vertex envelope max(lambda+, lambda-).
    flip_envelope: Vec<f64>,
    total_rate: f64,
    picker: WeightedAliasIndex<f64>,
    waiting: Exp<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        g: &'a WeightedGraph,
        rates: &'a BoundaryRates,
        field: &'a FieldSpec,
        accel: f64,
    ) -> Result<Self> {
        if !(accel > 0.0) {
            return Err(Error::InvalidInput("acceleration must be positive".into()));
        }
        let edge_envelope = (0.5 * field.edge_gap_bound()).exp();
        let mut weights: Vec<f64> = g
            .edges()
            .iter()
            .map(|e| e.conductance * edge_envelope)
            .collect();
        let flip_envelope: Vec<f64> = (0..rates.len())
            .map(|k| rates.plus(k).max(rates.minus(k)))
            .collect();
        weights.extend_from_slice(&flip_envelope);
        let total_rate = accel * weights.iter().sum::<f64>();
        let picker = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::InvalidInput(format!("envelope weights: {e}")))?;
        let waiting = Exp::new(total_rate)
            .map_err(|e| Error::InvalidInput(format!("envelope rate: {e}")))?;
        Ok(Self {
            g,
            rates,
            field,
            accel,
            edge_envelope,
            flip_envelope,
            total_rate,
            picker,
            waiting,
        })
    }

    /// Constant envelope rate Lambda.
    pub fn envelope(&self) -> f64 {
        self.total_rate
    }

    pub fn acceleration(&self) -> f64 {
        self.accel
    }

    /// Advances by one thinning candidate: waits Exp(Lambda), draws a
    /// candidate from the alias table and accepts it against its true rate at
    /// the candidate time.
    pub fn step(&self, st: &mut SimState) -> Result<StepEvent> {
        let wait = self.waiting.sample(&mut st.rng);
        st.clock += wait;
        self.fire_candidate(st)
    }

    fn fire_candidate(&self, st: &mut SimState) -> Result<StepEvent> {
        st.candidates += 1;
        let k = self.picker.sample(&mut st.rng);
        let m = self.g.edge_count();
        if k < m {
            let edge = k as EdgeId;
            let e = self.g.edge(edge);
            let d_eta = st.config.get(e.head) as f64 - st.config.get(e.tail) as f64;
            let rate = if d_eta == 0.0 {
                e.conductance
            } else {
                let d_h =
                    self.field.value(st.clock, e.tail) - self.field.value(st.clock, e.head);
                e.conductance * (0.5 * d_eta * d_h).exp()
            };
            let envelope = e.conductance * self.edge_envelope;
            if rate > envelope * (1.0 + 1e-12) {
                return Err(Error::EnvelopeViolated { edge, rate, envelope });
            }
            if st.rng.gen::<f64>() * envelope < rate {
                st.accepted += 1;
                if d_eta == 0.0 {
                    return Ok(StepEvent::ExchangeNoop { edge });
                }
                let tail_occ = st.config.get(e.tail);
                st.config.set(e.tail, st.config.get(e.head));
                st.config.set(e.head, tail_occ);
                // +1 when the particle moved tail -> head
                let sign: i8 = if tail_occ == 1 { 1 } else { -1 };
                st.current[k] += sign as i64;
                return Ok(StepEvent::Swap { edge, sign });
            }
            Ok(StepEvent::Rejected)
        } else {
            let b = k - m;
            let a = self.rates.vertices()[b];
            let occupied = st.config.occupied(a);
            let rate = if occupied { self.rates.minus(b) } else { self.rates.plus(b) };
            let envelope = self.flip_envelope[b];
            if st.rng.gen::<f64>() * envelope < rate {
                st.accepted += 1;
                st.config.set(a, u8::from(!occupied));
                st.boundary_flips[b] += if occupied { -1 } else { 1 };
                return Ok(StepEvent::Flip { vertex: a, birth: !occupied });
            }
            Ok(StepEvent::Rejected)
        }
    }

    /// Runs until the clock reaches `t_end`, emitting snapshots at the given
    /// sorted sample times. A snapshot at time s is the state immediately
    /// before the first candidate at or after s. Bit-reproducible for a fixed
    /// RNG stream.
    pub fn run(
        &self,
        eta0: &Configuration,
        t_end: f64,
        rng: ChaCha8Rng,
        sample_times: &[f64],
    ) -> Result<RunOutput> {
        if !sample_times.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInput("sample times must be sorted".into()));
        }
        if sample_times.iter().any(|&s| s < 0.0 || s > t_end) {
            return Err(Error::InvalidInput("sample times must lie in [0, t_end]".into()));
        }
        let mut st = SimState::new(self.g, eta0.clone(), rng)?;
        let mut snapshots = Vec::with_capacity(sample_times.len());
        let mut next = 0usize;
        loop {
            let wait = self.waiting.sample(&mut st.rng);
            let t_candidate = st.clock + wait;
            while next < sample_times.len() && sample_times[next] <= t_candidate.min(t_end) {
                snapshots.push(Snapshot {
                    time: sample_times[next],
                    eta: st.config.bits().to_vec(),
                    current: st.current.clone(),
                    boundary_flips: st.boundary_flips.clone(),
                });
                next += 1;
            }
            if t_candidate >= t_end {
                st.clock = t_end;
                break;
            }
            st.clock = t_candidate;
            self.fire_candidate(&mut st)?;
        }
        Ok(RunOutput { snapshots, state: st })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub state: SimState,
}

/// Interior mass conservation: sum of signed outgoing currents at x equals
/// -(eta_t(x) - eta_0(x)), exactly in integers. Returns the worst violation.
pub fn conservation_violation(
    g: &WeightedGraph,
    eta0: &Configuration,
    eta_t: &[u8],
    current: &[i64],
) -> i64 {
    let mut worst = 0i64;
    for &x in g.interior() {
        let mut outflow = 0i64;
        for &(_, e) in g.neighbors(x) {
            let edge = g.edge(e);
            let w = current[e as usize];
            outflow += if edge.tail == x { w } else { -w };
        }
        let delta = eta_t[x as usize] as i64 - eta0.get(x) as i64;
        worst = worst.max((outflow + delta).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_sg;
    use crate::rng::stream;

    fn two_vertex_graph() -> WeightedGraph {
        WeightedGraph::new(vec![(0.0, 0.0), (1.0, 0.0)], vec![(0, 1, 1.0)], vec![]).unwrap()
    }

    #[test]
    fn edge_rate_examples() {
        let g = two_vertex_graph();
        let h0 = VertexFunction::zeros(2);
        let eta = Configuration::from_bits(vec![1, 0]).unwrap();
        assert_eq!(edge_rate(&g, &eta, &h0, 0), 1.0);

        // eta(x)=1, eta(y)=0, H(x)-H(y)=delta: rate = c exp(-delta/2)
        let delta = 0.8;
        let h = VertexFunction::from_vec(vec![delta, 0.0]);
        let r = edge_rate(&g, &eta, &h, 0);
        assert!((r - (-delta / 2.0).exp()).abs() < 1e-15);

        // equal occupations: rate c, no effect
        let eta_eq = Configuration::from_bits(vec![1, 1]).unwrap();
        assert_eq!(edge_rate(&g, &eta_eq, &h, 0), 1.0);
    }

    #[test]
    fn boundary_rate_examples() {
        let g = build_sg(0).unwrap();
        let rates = BoundaryRates::new(&g, vec![2.0, 1.0, 1.0], vec![5.0, 1.0, 1.0]).unwrap();
        let a = g.boundary()[0];
        let empty = Configuration::from_bits(vec![0, 0, 0]).unwrap();
        let full = Configuration::from_bits(vec![1, 1, 1]).unwrap();
        assert_eq!(boundary_rate(&empty, a, &rates).unwrap(), 2.0);
        assert_eq!(boundary_rate(&full, a, &rates).unwrap(), 5.0);
        let b = g.boundary()[1];
        assert_eq!(boundary_rate(&empty, b, &rates).unwrap(), 1.0);
        assert_eq!(boundary_rate(&full, b, &rates).unwrap(), 1.0);
    }

    #[test]
    fn rho_bar_and_gamma() {
        let g = build_sg(0).unwrap();
        let rates = BoundaryRates::from_rho_bar(&g, &[0.8, 0.2, 0.5], 1.0).unwrap();
        assert!((rates.rho_bar(0) - 0.8).abs() < 1e-15);
        assert!((rates.ratio_bound() - 4.0).abs() < 1e-12);
        assert!(BoundaryRates::new(&g, vec![0.0, 1.0, 1.0], vec![1.0; 3]).is_err());
    }

    #[test]
    fn single_edge_swap_updates_current() {
        // the only effective event swaps (1,0) -> (0,1) with W = +1
        let g = two_vertex_graph();
        let field = FieldSpec::zero(&g, 10.0);
        let rates = BoundaryRates::new(&g, vec![], vec![]).unwrap();
        let sim = Simulator::new(&g, &rates, &field, 1.0).unwrap();
        let eta0 = Configuration::from_bits(vec![1, 0]).unwrap();
        let mut st = SimState::new(&g, eta0, stream(1, "test", 0)).unwrap();
        let ev = sim.step(&mut st).unwrap();
        assert_eq!(ev, StepEvent::Swap { edge: 0, sign: 1 });
        assert_eq!(st.config.bits(), &[0, 1]);
        assert_eq!(st.current[0], 1);
    }

    #[test]
    fn mass_conservation_is_exact() {
        let g = build_sg(2).unwrap();
        let field = FieldSpec::harmonic(&g, [0.5, -0.5, 0.0], crate::tilt::TimeShape::Sine, 1.0)
            .unwrap();
        let rates = BoundaryRates::from_rho_bar(&g, &[0.7, 0.3, 0.5], 1.0).unwrap();
        let sim = Simulator::new(&g, &rates, &field, g.time_acceleration()).unwrap();
        let mut rng = stream(42, "test", 1);
        let rho0 = VertexFunction::constant(g.vertex_count(), 0.5);
        let eta0 = Configuration::sample_profile(&rho0, &mut rng);
        let out = sim
            .run(&eta0, 1.0, rng, &[0.25, 0.5, 0.75, 1.0])
            .unwrap();
        assert_eq!(out.snapshots.len(), 4);
        for snap in &out.snapshots {
            assert_eq!(conservation_violation(&g, &eta0, &snap.eta, &snap.current), 0);
        }
        // boundary bookkeeping: flips minus outflow equals the change
        let last = out.snapshots.last().unwrap();
        for (k, &a) in g.boundary().iter().enumerate() {
            let mut outflow = 0i64;
            for &(_, e) in g.neighbors(a) {
                let edge = g.edge(e);
                let w = last.current[e as usize];
                outflow += if edge.tail == a { w } else { -w };
            }
            let delta = last.eta[a as usize] as i64 - eta0.get(a) as i64;
            assert_eq!(last.boundary_flips[k] - outflow, delta);
        }
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let g = build_sg(1).unwrap();
        let field = FieldSpec::zero(&g, 2.0);
        let rates = BoundaryRates::from_rho_bar(&g, &[0.5, 0.5, 0.5], 1.0).unwrap();
        let sim = Simulator::new(&g, &rates, &field, 5.0).unwrap();
        let eta0 = Configuration::from_bits(vec![1, 0, 1, 0, 1, 0]).unwrap();
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.1).collect();
        let a = sim.run(&eta0, 2.0, stream(9, "sim", 3), &times).unwrap();
        let b = sim.run(&eta0, 2.0, stream(9, "sim", 3), &times).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.eta, y.eta);
            assert_eq!(x.current, y.current);
            assert_eq!(x.boundary_flips, y.boundary_flips);
        }
    }

    #[test]
    fn zero_horizon_run_snapshots_initial_state() {
        let g = build_sg(1).unwrap();
        let field = FieldSpec::zero(&g, 0.0);
        let rates = BoundaryRates::from_rho_bar(&g, &[0.5, 0.5, 0.5], 1.0).unwrap();
        let sim = Simulator::new(&g, &rates, &field, 5.0).unwrap();
        let eta0 = Configuration::from_bits(vec![1, 1, 0, 0, 1, 0]).unwrap();
        let out = sim.run(&eta0, 0.0, stream(5, "sim", 0), &[0.0]).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.snapshots[0].eta, eta0.bits());
        assert!(out.snapshots[0].current.iter().all(|&w| w == 0));
    }

    #[test]
    fn isolated_boundary_vertex_equilibrates_to_half() {
        // single boundary vertex with lambda+ = lambda- = 1: Bernoulli(1/2)
        let g = WeightedGraph::new(vec![(0.0, 0.0)], vec![], vec![0]).unwrap();
        let field = FieldSpec::zero(&g, f64::INFINITY);
        let rates = BoundaryRates::new(&g, vec![1.0], vec![1.0]).unwrap();
        let sim = Simulator::new(&g, &rates, &field, 1.0).unwrap();
        let mut st = SimState::new(&g, Configuration::empty(1), stream(2024, "bd", 0)).unwrap();
        let t_end = 1e5;
        let mut occupied_time = 0.0;
        while st.clock < t_end {
            let before = st.clock;
            let occ = st.config.occupied(0);
            sim.step(&mut st).unwrap();
            let after = st.clock.min(t_end);
            if occ {
                occupied_time += after - before;
            }
        }
        let fraction = occupied_time / t_end;
        // autocorrelation time of the flip chain is 1/2, so the standard
        // error of the time average is about sqrt(2 tau var / T) ~ 1.6e-3
        let se = (2.0 * 0.5 * 0.25 / t_end).sqrt();
        assert!(
            (fraction - 0.5).abs() < 3.0 * se,
            "fraction {fraction} not within 3 s.e. ({se}) of 1/2"
        );
    }

    #[test]
    fn triangle_occupations_match_oracle() {
        // level-0 long run against the exact 8-state stationary profile
        use crate::oracle::{generator_matrix, occupation_expectations, stationary_distribution};
        let g = build_sg(0).unwrap();
        let rates = BoundaryRates::from_rho_bar(&g, &[0.7, 0.3, 0.5], 1.0).unwrap();
        let gen = generator_matrix(&g, None, Some(&rates)).unwrap();
        let pi = stationary_distribution(&gen).unwrap();
        let target = occupation_expectations(&g, &pi);

        let field = FieldSpec::zero(&g, f64::INFINITY);
        let sim = Simulator::new(&g, &rates, &field, 1.0).unwrap();
        let mut st =
            SimState::new(&g, Configuration::empty(3), stream(11, "triangle", 0)).unwrap();
        let t_end = 5e4;
        let burn = 50.0;
        let batches = 100usize;
        let batch_len = (t_end - burn) / batches as f64;
        let mut occupied = vec![0.0f64; 3];
        let mut means: Vec<Vec<f64>> = Vec::new();
        let mut batch = 0usize;
        while batch < batches {
            let before = st.clock;
            let bits = st.config.bits().to_vec();
            sim.step(&mut st).unwrap();
            let boundary = burn + (batch + 1) as f64 * batch_len;
            let weight = (st.clock.min(boundary) - before.max(burn)).max(0.0);
            for v in 0..3 {
                occupied[v] += weight * bits[v] as f64;
            }
            if st.clock >= boundary {
                means.push(occupied.iter().map(|o| o / batch_len).collect());
                occupied = vec![0.0; 3];
                let carry = (st.clock - boundary).max(0.0).min(batch_len);
                for v in 0..3 {
                    occupied[v] += carry * bits[v] as f64;
                }
                batch += 1;
            }
        }
        for v in 0..3u32 {
            let vals: Vec<f64> = means.iter().map(|m| m[v as usize]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (vals.len() as f64 - 1.0);
            let se = (var / vals.len() as f64).sqrt();
            assert!(
                (mean - target[v]).abs() <= 3.0 * se,
                "vertex {v}: {mean} vs oracle {} (se {se})",
                target[v]
            );
        }
    }

    #[test]
    fn envelope_never_violated_on_tilted_run() {
        let g = build_sg(1).unwrap();
        let field =
            FieldSpec::harmonic(&g, [1.0, -1.0, 0.5], crate::tilt::TimeShape::Sine, 1.0).unwrap();
        let rates = BoundaryRates::from_rho_bar(&g, &[0.6, 0.4, 0.5], 2.0).unwrap();
        let sim = Simulator::new(&g, &rates, &field, 5.0).unwrap();
        let eta0 = Configuration::from_bits(vec![1, 0, 0, 1, 1, 0]).unwrap();
        // run() returns Err only on envelope violations
        let out = sim.run(&eta0, 1.0, stream(3, "env", 0), &[1.0]).unwrap();
        assert!(out.state.candidates > 0);
        assert!(out.state.accepted <= out.state.candidates);
    }
}
