//! Empirical density and integrated-current pairings, and ensemble statistics.
//!
//! Density pairing: `<pi, G> = (1/|V|) sum_x eta(x) G(x)`.
//!
//! Current pairing: `<W, grad F> = 5^{-N} sum_e W(e) (grad F)(e)
//! = 3^{-N} sum_{x->y} W(x->y) (F(y) - F(x))`. With this normalization the
//! integer ledger of the accelerated particle system pairs, in expectation,
//! against the same edge inner product the limit current lives in: in the
//! stationary process `d/dt E<W, grad F> = -E(h, F) + <chi grad H, grad F>`.
//!
//! Summing the interior conservation law against a test function F relates
//! the two pairings: `(1/|V|) sum_x F(x) (eta_t - eta_0)(x) =
//! -(3^N / |V|) * <W_t, grad F>` up to boundary-incident edge terms. The
//! constant 3^N / |V_N| (tending to 2/3) converts between the uniform vertex
//! measure and the edge count scale; it is the same lattice constant that
//! separates the particle clock from the energy-form clock.

use crate::error::{Error, Result};
use crate::fields::{EdgeFunction, VertexFunction};
use crate::graph::WeightedGraph;
use crate::wasep::Configuration;

/// `(1/|V|) sum_x rho(x) G(x)` for a real-valued density profile.
pub fn density_pairing(
    g: &WeightedGraph,
    rho: &VertexFunction,
    test: &VertexFunction,
) -> Result<f64> {
    rho.check_len(g, "density_pairing")?;
    test.check_len(g, "density_pairing")?;
    let acc: f64 = rho
        .values()
        .iter()
        .zip(test.values())
        .map(|(r, t)| r * t)
        .sum();
    Ok(acc / g.vertex_count() as f64)
}

/// Density pairing of an occupation configuration.
pub fn density_pairing_config(
    g: &WeightedGraph,
    eta: &Configuration,
    test: &VertexFunction,
) -> Result<f64> {
    if eta.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            context: "density_pairing",
            expected: g.vertex_count(),
            got: eta.len(),
        });
    }
    test.check_len(g, "density_pairing")?;
    let acc: f64 = eta
        .bits()
        .iter()
        .zip(test.values())
        .map(|(&b, t)| b as f64 * t)
        .sum();
    Ok(acc / g.vertex_count() as f64)
}

/// `5^{-N} sum_e W(e) (grad F)(e)` for a real edge current.
pub fn current_pairing(
    g: &WeightedGraph,
    current: &EdgeFunction,
    test: &VertexFunction,
) -> Result<f64> {
    current.check_len(g, "current_pairing")?;
    test.check_len(g, "current_pairing")?;
    let scale = 1.0 / match g.level() {
        Some(n) => 3.0f64.powi(n as i32),
        None => 1.0,
    };
    let mut acc = 0.0;
    for (i, e) in g.edges().iter().enumerate() {
        acc += current.values()[i] * (test[e.head] - test[e.tail]);
    }
    Ok(scale * acc)
}

/// Current pairing of an integer ledger.
pub fn current_pairing_ledger(
    g: &WeightedGraph,
    ledger: &[i64],
    test: &VertexFunction,
) -> Result<f64> {
    if ledger.len() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            context: "current_pairing",
            expected: g.edge_count(),
            got: ledger.len(),
        });
    }
    let w = EdgeFunction::from_vec(ledger.iter().map(|&x| x as f64).collect());
    current_pairing(g, &w, test)
}

/// Summary of an ensemble of replica values at a fixed time.
#[derive(Clone, Copy, Debug)]
pub struct EnsembleStats {
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation / sqrt(n)).
    pub stderr: f64,
    /// Fraction of replicas with |value - reference| > delta.
    pub deviation_fraction: f64,
    /// Wilson 95% confidence interval for the deviation probability.
    pub wilson: (f64, f64),
}

/// Mean, standard error and empirical deviation probability against a
/// reference value with threshold `delta`.
pub fn ensemble_stats(values: &[f64], reference: f64, delta: f64) -> Result<EnsembleStats> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(
            "ensemble statistics require at least two replicas".into(),
        ));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let stderr = (var / n as f64).sqrt();
    let deviating = values.iter().filter(|&&v| (v - reference).abs() > delta).count();
    let fraction = deviating as f64 / n as f64;
    Ok(EnsembleStats {
        n,
        mean,
        stderr,
        deviation_fraction: fraction,
        wilson: wilson_interval(deviating, n, 1.96),
    })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Deterministic battery of smooth test functions for density pairings:
/// 1, x, y, x*y, x^2 + y^2.
pub fn density_test_battery(g: &WeightedGraph) -> Vec<(String, VertexFunction)> {
    let coords: Vec<(f64, f64)> = g.vertices().iter().map(|v| (v.x, v.y)).collect();
    vec![
        ("const".into(), VertexFunction::constant(g.vertex_count(), 1.0)),
        ("x".into(), VertexFunction::from_fn(g.vertex_count(), |v| coords[v as usize].0)),
        ("y".into(), VertexFunction::from_fn(g.vertex_count(), |v| coords[v as usize].1)),
        (
            "xy".into(),
            VertexFunction::from_fn(g.vertex_count(), |v| {
                coords[v as usize].0 * coords[v as usize].1
            }),
        ),
        (
            "r2".into(),
            VertexFunction::from_fn(g.vertex_count(), |v| {
                let (x, y) = coords[v as usize];
                x * x + y * y
            }),
        ),
    ]
}

/// Battery for current pairings; the harmonic profile of (1, 0, 0) is
/// included because its pairing with the stationary current is order one.
pub fn current_test_battery(g: &WeightedGraph) -> Result<Vec<(String, VertexFunction)>> {
    let coords: Vec<(f64, f64)> = g.vertices().iter().map(|v| (v.x, v.y)).collect();
    let mut battery = vec![
        ("x".into(), VertexFunction::from_fn(g.vertex_count(), |v| coords[v as usize].0)),
        ("y".into(), VertexFunction::from_fn(g.vertex_count(), |v| coords[v as usize].1)),
        (
            "xy".into(),
            VertexFunction::from_fn(g.vertex_count(), |v| {
                coords[v as usize].0 * coords[v as usize].1
            }),
        ),
        (
            "x2-y2".into(),
            VertexFunction::from_fn(g.vertex_count(), |v| {
                let (x, y) = coords[v as usize];
                x * x - y * y
            }),
        ),
    ];
    if g.boundary().len() == 3 {
        let h = crate::calculus::solve_harmonic(
            g,
            &crate::calculus::corner_values(g, [1.0, 0.0, 0.0])?,
        )?;
        battery.push(("h100".into(), h));
    }
    Ok(battery)
}
