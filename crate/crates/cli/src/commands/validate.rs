//! Schema and invariant checks without execution: prints the resolved
//! configuration plus the derived quantities a run would use (reservoir
//! rates, thinning envelope, candidate-count estimate).

use hydro_core::graph::build_sg;
use hydro_core::wasep::Simulator;

use crate::config::{ExperimentConfig, Kind};
use crate::Failure;

pub fn run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("config error: {e}");
        }
        return Err(Failure::Config(format!("{} invalid field(s)", errors.len())));
    }

    let resolved = serde_json::to_string_pretty(cfg).expect("config serializes");
    println!("ok");
    println!("{resolved}");

    let g = build_sg(cfg.level).map_err(|e| Failure::Config(e.to_string()))?;
    let mut derived = serde_json::json!({
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "acceleration": g.time_acceleration(),
        "particle_clock_factor": g.particle_clock_factor(),
    });
    if matches!(cfg.kind, Kind::Simulate | Kind::LlnExperiment) {
        let rates = cfg.boundary_rates(&g).map_err(|e| Failure::Config(e.to_string()))?;
        let field = cfg.field_spec(&g).map_err(|e| Failure::Config(e.to_string()))?;
        let sim = Simulator::new(&g, &rates, &field, g.time_acceleration())
            .map_err(|e| Failure::Config(e.to_string()))?;
        let envelope = sim.envelope();
        let expected_candidates = envelope * cfg.t_end * cfg.replicas as f64;
        derived["rho_bar"] = serde_json::json!(rates.rho_bar_all());
        derived["rate_ratio_bound"] = serde_json::json!(rates.ratio_bound());
        derived["tilt_gap_bound"] = serde_json::json!(field.edge_gap_bound());
        derived["envelope"] = serde_json::json!(envelope);
        derived["expected_candidates"] = serde_json::json!(expected_candidates);
    }
    if matches!(cfg.kind, Kind::Pde | Kind::Rate | Kind::LlnExperiment) {
        derived["steps"] = serde_json::json!((cfg.t_end / cfg.dt).ceil() as u64);
    }
    println!("{}", serde_json::to_string_pretty(&derived).expect("derived serializes"));
    Ok(())
}
