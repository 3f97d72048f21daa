pub mod build_graph;
pub mod lln;
pub mod pde;
pub mod rate;
pub mod simulate;
pub mod validate;

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::Failure;

/// Worker pool for replica ensembles; replicas own independent RNG streams
/// and are collected by index, so the thread count never changes any output.
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))
}

pub fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Failure::Io(format!("cannot create {:?}: {e}", cfg.out_dir)))?;
    Ok(cfg.out_dir.as_path())
}

/// Sorted sample times, defaulting to the final time when none are given.
pub fn resolved_sample_times(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.sample_times.is_empty() {
        vec![cfg.t_end]
    } else {
        cfg.sample_times.clone()
    }
}
