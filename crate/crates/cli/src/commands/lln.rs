//! Law-of-large-numbers experiment: a replica ensemble of the accelerated
//! particle system against one solver run with matched parameters, solved in
//! the particle clock (time scale 3^N / |V_N|). The report lists, per test
//! function and sample time, the ensemble mean, its standard error, the
//! solver reference and the fraction of replicas deviating beyond delta.

use hydro_core::calculus::{discrete_gradient, edge_inner_product};
use hydro_core::graph::build_sg;
use hydro_core::observables::{
    current_pairing_ledger, current_test_battery, density_test_battery, ensemble_stats,
};
use hydro_core::pde::{self, PdeConfig};
use hydro_core::rng::stream;
use hydro_core::wasep::{Configuration, Simulator, Snapshot};
use rayon::prelude::*;

use super::{ensure_out_dir, resolved_sample_times, thread_pool};
use crate::config::ExperimentConfig;
use crate::output::{CsvWriter, Manifest, SCHEMA_RESULTS};
use crate::{run_err, setup_err, Failure};

pub fn run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = build_sg(cfg.level).map_err(setup_err)?;
    let rates = cfg.boundary_rates(&g).map_err(setup_err)?;
    let field = cfg.field_spec(&g).map_err(setup_err)?;
    let sim = Simulator::new(&g, &rates, &field, g.time_acceleration()).map_err(setup_err)?;
    let rho0 = cfg.initial_profile(&g).map_err(setup_err)?;
    let sample_times = resolved_sample_times(cfg);

    let pool = thread_pool(cfg.threads)?;
    let replica_snapshots: Vec<Vec<Snapshot>> = pool
        .install(|| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = stream(cfg.seed, "lln", rep);
                    let eta0 = Configuration::sample_profile(&rho0, &mut rng);
                    sim.run(&eta0, cfg.t_end, rng, &sample_times).map(|out| out.snapshots)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(run_err)?;

    // reference trajectory in the particle clock
    let tau = g.particle_clock_factor();
    let pde_cfg = PdeConfig {
        dt: cfg.dt,
        t_end: cfg.t_end,
        theta: cfg.theta,
        time_scale: tau,
        ..Default::default()
    };
    let reference = pde::solve(&g, pde_cfg, &field, rho0, &cfg.boundary_values(&g).map_err(setup_err)?)
        .map_err(run_err)?;

    let g_battery = density_test_battery(&g);
    let f_battery = current_test_battery(&g).map_err(setup_err)?;

    let dir = ensure_out_dir(cfg)?;
    let mut results = CsvWriter::create(
        dir.join("results.csv"),
        SCHEMA_RESULTS,
        "observable,t,mean,stderr,reference,deviation_fraction,n_replicas",
    )?;
    let mut worst_density_gap = 0.0f64;
    let mut worst_current_rel = 0.0f64;
    for (si, &t) in sample_times.iter().enumerate() {
        let k = reference.index_at(t);
        for (name, gf) in &g_battery {
            let ref_value: f64 = reference.rho[k]
                .values()
                .iter()
                .zip(gf.values())
                .map(|(r, w)| r * w)
                .sum::<f64>()
                / g.vertex_count() as f64;
            let vals: Vec<f64> = replica_snapshots
                .iter()
                .map(|snaps| {
                    snaps[si]
                        .eta
                        .iter()
                        .zip(gf.values())
                        .map(|(&b, w)| b as f64 * w)
                        .sum::<f64>()
                        / g.vertex_count() as f64
                })
                .collect();
            let stats = ensemble_stats(&vals, ref_value, cfg.deviation_delta).map_err(run_err)?;
            worst_density_gap = worst_density_gap.max((stats.mean - ref_value).abs());
            results.row(format_args!(
                "density:{name},{t},{},{},{ref_value},{},{}",
                stats.mean, stats.stderr, stats.deviation_fraction, stats.n
            ))?;
        }
        for (name, ff) in &f_battery {
            let grad_f = discrete_gradient(&g, ff).map_err(run_err)?;
            let ref_value =
                edge_inner_product(&g, &reference.flux[k], &grad_f).map_err(run_err)? / tau;
            let vals: Vec<f64> = replica_snapshots
                .iter()
                .map(|snaps| current_pairing_ledger(&g, &snaps[si].current, ff))
                .collect::<Result<_, _>>()
                .map_err(run_err)?;
            let stats = ensemble_stats(&vals, ref_value, cfg.deviation_delta).map_err(run_err)?;
            if ref_value.abs() > 1e-12 {
                worst_current_rel =
                    worst_current_rel.max((stats.mean - ref_value).abs() / ref_value.abs());
            }
            results.row(format_args!(
                "current:{name},{t},{},{},{ref_value},{},{}",
                stats.mean, stats.stderr, stats.deviation_fraction, stats.n
            ))?;
        }
    }
    let results = results.finish()?;

    let mut manifest = Manifest::new("lln-experiment", cfg);
    manifest.derived = serde_json::json!({
        "level": cfg.level,
        "acceleration": g.time_acceleration(),
        "time_scale": tau,
        "envelope": sim.envelope(),
        "lambda_plus": (0..rates.len()).map(|k| rates.plus(k)).collect::<Vec<_>>(),
        "lambda_minus": (0..rates.len()).map(|k| rates.minus(k)).collect::<Vec<_>>(),
        "sample_times": sample_times,
        "weak_form_residual": reference.weak_residual,
        "worst_density_gap": worst_density_gap,
        "worst_current_relative_gap": worst_current_rel,
    });
    manifest.output(&results, SCHEMA_RESULTS);
    manifest.write(dir)?;
    log::info!(
        "worst density gap {worst_density_gap:.4}, worst current relative gap {worst_current_rel:.4}"
    );
    println!("{}", results.display());
    Ok(())
}
