use hydro_core::graph::build_sg;

use super::ensure_out_dir;
use crate::config::ExperimentConfig;
use crate::output::{write_json, Manifest, SCHEMA_GRAPH};
use crate::{setup_err, Failure};

pub fn run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = build_sg(cfg.level).map_err(setup_err)?;
    let dir = ensure_out_dir(cfg)?;
    let path = dir.join("graph.json");
    write_json(&path, &g.to_json())?;

    let mut manifest = Manifest::new("build-graph", cfg);
    manifest.derived = serde_json::json!({
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "boundary": g.boundary(),
    });
    manifest.output(&path, SCHEMA_GRAPH);
    manifest.write(dir)?;
    log::info!("wrote {:?} ({} vertices, {} edges)", path, g.vertex_count(), g.edge_count());
    println!("{}", path.display());
    Ok(())
}
