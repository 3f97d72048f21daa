use hydro_core::graph::build_sg;
use hydro_core::rng::stream;
use hydro_core::wasep::{conservation_violation, Configuration, RunOutput, Simulator};
use rayon::prelude::*;

use super::{ensure_out_dir, resolved_sample_times, thread_pool};
use crate::config::ExperimentConfig;
use crate::output::{CsvWriter, Manifest, SCHEMA_CURRENTS, SCHEMA_SNAPSHOTS};
use crate::{run_err, setup_err, Failure};

pub fn run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = build_sg(cfg.level).map_err(setup_err)?;
    let rates = cfg.boundary_rates(&g).map_err(setup_err)?;
    let field = cfg.field_spec(&g).map_err(setup_err)?;
    let sim = Simulator::new(&g, &rates, &field, g.time_acceleration()).map_err(setup_err)?;
    let rho0 = cfg.initial_profile(&g).map_err(setup_err)?;
    let sample_times = resolved_sample_times(cfg);

    let pool = thread_pool(cfg.threads)?;
    let runs: Vec<(Configuration, RunOutput)> = pool
        .install(|| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream(cfg.seed, "sim", rep);
                    let eta0 = Configuration::sample_profile(&rho0, &mut rng);
                    sim.run(&eta0, cfg.t_end, rng, &sample_times)
                        .map(|out| (eta0, out))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(run_err)?;

    // interior conservation holds exactly in integers on every snapshot
    for (eta0, out) in &runs {
        for snap in &out.snapshots {
            let violation = conservation_violation(&g, eta0, &snap.eta, &snap.current);
            if violation != 0 {
                return Err(Failure::Numerical(format!(
                    "interior conservation violated by {violation} at t = {}",
                    snap.time
                )));
            }
        }
    }

    let dir = ensure_out_dir(cfg)?;
    let mut snapshots = CsvWriter::create(
        dir.join("snapshots.csv"),
        SCHEMA_SNAPSHOTS,
        "replica,time,vertex_id,eta",
    )?;
    let mut currents = CsvWriter::create(
        dir.join("currents.csv"),
        SCHEMA_CURRENTS,
        "replica,time,edge_id,current",
    )?;
    let mut candidates = 0u64;
    let mut accepted = 0u64;
    for (rep, (_, out)) in runs.iter().enumerate() {
        for snap in &out.snapshots {
            for (v, &occ) in snap.eta.iter().enumerate() {
                snapshots.row(format_args!("{rep},{},{v},{occ}", snap.time))?;
            }
            for (e, &w) in snap.current.iter().enumerate() {
                currents.row(format_args!("{rep},{},{e},{w}", snap.time))?;
            }
        }
        candidates += out.state.candidates;
        accepted += out.state.accepted;
    }
    let snapshots = snapshots.finish()?;
    let currents = currents.finish()?;

    let mut manifest = Manifest::new("simulate", cfg);
    manifest.derived = serde_json::json!({
        "level": cfg.level,
        "acceleration": g.time_acceleration(),
        "lambda_plus": (0..rates.len()).map(|k| rates.plus(k)).collect::<Vec<_>>(),
        "lambda_minus": (0..rates.len()).map(|k| rates.minus(k)).collect::<Vec<_>>(),
        "rho_bar": rates.rho_bar_all(),
        "rate_ratio_bound": rates.ratio_bound(),
        "tilt_gap_bound": field.edge_gap_bound(),
        "envelope": sim.envelope(),
        "sample_times": sample_times,
        "candidates": candidates,
        "accepted": accepted,
    });
    manifest.output(&snapshots, SCHEMA_SNAPSHOTS);
    manifest.output(&currents, SCHEMA_CURRENTS);
    manifest.write(dir)?;
    log::info!("{} replicas, {candidates} candidates, {accepted} accepted", cfg.replicas);
    println!("{}", snapshots.display());
    println!("{}", currents.display());
    Ok(())
}
