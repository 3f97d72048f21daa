//! Output files and run manifests.
//!
//! Every CSV starts with a `# schema: <id>` comment pinning its column
//! layout; every run writes a `manifest.json` embedding the fully resolved
//! configuration, the derived quantities and the list of produced files, so
//! the run can be repeated bit for bit by pointing the same subcommand at the
//! manifest. Floats are written in Rust's shortest round-trip form, which is
//! platform-independent.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SCHEMA_SNAPSHOTS: &str = "hydro.snapshots.v1";
pub const SCHEMA_CURRENTS: &str = "hydro.currents.v1";
pub const SCHEMA_DENSITY: &str = "hydro.density.v1";
pub const SCHEMA_FLUX: &str = "hydro.flux.v1";
pub const SCHEMA_RESULTS: &str = "hydro.results.v1";
pub const SCHEMA_GRAPH: &str = "hydro.graph.v1";
pub const SCHEMA_RATE: &str = "hydro.rate.v1";
pub const SCHEMA_MANIFEST: &str = "hydro.manifest.v1";

pub struct CsvWriter {
    writer: BufWriter<fs::File>,
    pub path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: PathBuf, schema: &str, header: &str) -> std::io::Result<Self> {
        let file = fs::File::create(&path)?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "# schema: {schema}")?;
        writeln!(writer, "{header}")?;
        Ok(Self { writer, path })
    }

    pub fn row(&mut self, fields: std::fmt::Arguments<'_>) -> std::io::Result<()> {
        self.writer.write_fmt(fields)?;
        self.writer.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

#[derive(Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub derived: serde_json::Value,
    pub schemas: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            schema: SCHEMA_MANIFEST,
            tool: "hydro",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            derived: serde_json::Value::Null,
            schemas: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, path: &Path, schema: &str) {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.schemas.insert(name.clone(), schema.to_string());
        self.outputs.push(name);
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n")
}
