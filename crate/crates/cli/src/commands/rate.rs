use std::path::Path;

use hydro_core::graph::build_sg;
use hydro_core::pde::{self, PdeConfig};
use hydro_core::rate::{rate_report, RateOptions};
use hydro_core::trajectory::Trajectory;
use hydro_core::{EdgeFunction, VertexFunction, WeightedGraph};

use super::ensure_out_dir;
use crate::config::ExperimentConfig;
use crate::output::{write_json, Manifest, SCHEMA_RATE};
use crate::{run_err, setup_err, Failure};

pub fn run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = build_sg(cfg.level).map_err(setup_err)?;
    let traj = match &cfg.trajectory {
        Some(files) => load_trajectory(&g, &files.density, &files.flux)?,
        None => {
            // no input files: integrate the equation with these parameters
            let bv = cfg.boundary_values(&g).map_err(setup_err)?;
            let field = cfg.field_spec(&g).map_err(setup_err)?;
            let rho0 = cfg.initial_profile(&g).map_err(setup_err)?;
            let pde_cfg = PdeConfig {
                dt: cfg.dt,
                t_end: cfg.t_end,
                theta: cfg.theta,
                time_scale: cfg.pde_clock.factor(&g),
                ..Default::default()
            };
            let solved = pde::solve(&g, pde_cfg, &field, rho0, &bv).map_err(run_err)?;
            Trajectory::from_pde(&g, &solved).map_err(run_err)?
        }
    };

    let report = rate_report(&g, &traj, &RateOptions::default()).map_err(run_err)?;
    let dir = ensure_out_dir(cfg)?;
    let path = dir.join("rate.json");
    write_json(&path, &report)?;

    let mut manifest = Manifest::new("rate", cfg);
    manifest.derived = serde_json::json!({
        "grid_points": traj.times.len(),
        "conservation_residual_max": report.conservation_residual_max,
    });
    manifest.output(&path, SCHEMA_RATE);
    manifest.write(dir)?;
    println!("{}", path.display());
    Ok(())
}

/// Reads a (t, vertex, rho) and a (t, edge, flux) CSV pair back into a
/// trajectory. Shortest round-trip float formatting makes this lossless for
/// files written by the pde subcommand.
fn load_trajectory(g: &WeightedGraph, density: &Path, flux: &Path) -> Result<Trajectory, Failure> {
    let rho = read_grid(density, g.vertex_count())?;
    let cur = read_grid(flux, g.edge_count())?;
    if rho.0 != cur.0 {
        return Err(Failure::Config(
            "density and flux files live on different time grids".into(),
        ));
    }
    Trajectory::synthetic(
        g,
        rho.0,
        rho.1.into_iter().map(VertexFunction::from_vec).collect(),
        cur.1.into_iter().map(EdgeFunction::from_vec).collect(),
    )
    .map_err(|e| Failure::Config(e.to_string()))
}

fn read_grid(path: &Path, width: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {path:?}: {e}")))?;
    let mut times: Vec<f64> = Vec::new();
    let mut frames: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            if line_no == 1 || cols.first().is_some_and(|c| c.parse::<f64>().is_err()) {
                continue; // header row
            }
            return Err(Failure::Config(format!("{path:?}:{}: expected 3 columns", line_no + 1)));
        }
        let Ok(t) = cols[0].parse::<f64>() else {
            continue; // header row
        };
        let idx: usize = cols[1]
            .parse()
            .map_err(|e| Failure::Config(format!("{path:?}:{}: bad index: {e}", line_no + 1)))?;
        let value: f64 = cols[2]
            .parse()
            .map_err(|e| Failure::Config(format!("{path:?}:{}: bad value: {e}", line_no + 1)))?;
        if times.last().is_none_or(|&last| t != last) {
            times.push(t);
            frames.push(vec![0.0; width]);
        }
        if idx >= width {
            return Err(Failure::Config(format!(
                "{path:?}:{}: index {idx} out of range (width {width})",
                line_no + 1
            )));
        }
        frames.last_mut().unwrap()[idx] = value;
    }
    if times.is_empty() {
        return Err(Failure::Config(format!("{path:?}: no data rows")));
    }
    Ok((times, frames))
}
