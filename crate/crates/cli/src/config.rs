//! Experiment configuration: one JSON document per run, schema-validated,
//! with individual keys overridable from the command line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use hydro_core::calculus::BoundaryValues;
use hydro_core::tilt::{FieldSpec, TimeShape};
use hydro_core::wasep::BoundaryRates;
use hydro_core::{VertexFunction, WeightedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BuildGraph,
    Simulate,
    Pde,
    Rate,
    LlnExperiment,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::BuildGraph => "build-graph",
            Kind::Simulate => "simulate",
            Kind::Pde => "pde",
            Kind::Rate => "rate",
            Kind::LlnExperiment => "lln-experiment",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldDescriptor {
    /// H = 0: the symmetric process.
    #[default]
    Zero,
    /// Harmonic interpolation of three corner values times a scalar shape.
    Harmonic {
        corners: [f64; 3],
        #[serde(default = "default_shape")]
        shape: TimeShape,
    },
    /// Tabulated (t, vertex, value) rows with linear interpolation in t;
    /// unspecified vertices are zero.
    Table { entries: Vec<TableEntry> },
}

fn default_shape() -> TimeShape {
    TimeShape::Const
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub t: f64,
    pub vertex: u32,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InitialDensity {
    Named(InitialDensityName),
    /// Constant everywhere; requires equal reservoir densities.
    Constant { constant: f64 },
    /// Constant in the interior, reservoir values at the corners.
    InteriorConstant { interior_constant: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialDensityName {
    /// Harmonic interpolation of the reservoir densities.
    Harmonic,
}

impl Default for InitialDensity {
    fn default() -> Self {
        InitialDensity::Named(InitialDensityName::Harmonic)
    }
}

/// Clock of the solver: the energy-form clock (`form`, factor 1) or the
/// particle clock (`particle`, factor 3^N / |V_N|), or an explicit factor.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PdeClock {
    Named(PdeClockName),
    Factor(f64),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PdeClockName {
    Form,
    Particle,
}

impl Default for PdeClock {
    fn default() -> Self {
        PdeClock::Named(PdeClockName::Form)
    }
}

impl PdeClock {
    pub fn factor(self, g: &WeightedGraph) -> f64 {
        match self {
            PdeClock::Named(PdeClockName::Form) => 1.0,
            PdeClock::Named(PdeClockName::Particle) => g.particle_clock_factor(),
            PdeClock::Factor(f) => f,
        }
    }
}

/// Trajectory input files for the rate command.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFiles {
    pub density: PathBuf,
    pub flux: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub level: u32,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    /// Reservoir densities (with `reservoir_scale` setting the total flip
    /// intensity), or explicit lambda pairs.
    #[serde(default)]
    pub rho_bar: Option<[f64; 3]>,
    #[serde(default = "default_scale")]
    pub reservoir_scale: f64,
    #[serde(default)]
    pub lambda_plus: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda_minus: Option<Vec<f64>>,
    #[serde(default)]
    pub field: FieldDescriptor,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads for replica ensembles; 0 = all hardware threads.
    #[serde(default)]
    pub threads: usize,
    /// Deviation threshold delta of the ensemble report.
    #[serde(default = "default_delta")]
    pub deviation_delta: f64,
    #[serde(default)]
    pub initial_density: InitialDensity,
    #[serde(default)]
    pub pde_clock: PdeClock,
    #[serde(default)]
    pub trajectory: Option<TrajectoryFiles>,
}

fn default_t_end() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_theta() -> f64 {
    1.0
}
fn default_replicas() -> u64 {
    8
}
fn default_scale() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.02
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A field-anchored validation failure.
#[derive(Clone, Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ExperimentConfig {
    /// Applies `--set key=value` overrides (dotted paths into the document).
    pub fn apply_overrides(value: &mut serde_json::Value, sets: &[String]) -> Result<(), String> {
        for pair in sets {
            let (key, raw) = pair
                .split_once('=')
                .ok_or_else(|| format!("override '{pair}' is not of the form key=value"))?;
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut cursor = &mut *value;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                if i + 1 == parts.len() {
                    cursor
                        .as_object_mut()
                        .ok_or_else(|| format!("override path '{key}' does not address an object"))?
                        .insert(part.to_string(), parsed.clone());
                } else {
                    cursor = cursor
                        .as_object_mut()
                        .ok_or_else(|| format!("override path '{key}' does not address an object"))?
                        .entry(part.to_string())
                        .or_insert_with(|| serde_json::Value::Object(Default::default()));
                }
            }
        }
        Ok(())
    }

    /// Structural validation with field-anchored messages.
    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        let mut err = |path: &str, message: String| {
            errors.push(ConfigError { path: path.to_string(), message });
        };
        if self.level > hydro_core::graph::SG_MAX_LEVEL {
            err("level", format!("must be at most {}", hydro_core::graph::SG_MAX_LEVEL));
        }
        if !(self.t_end >= 0.0) {
            err("t_end", "must be nonnegative".into());
        }
        if !(self.dt > 0.0) {
            err("dt", "must be strictly positive".into());
        }
        if !(0.5..=1.0).contains(&self.theta) {
            err("theta", "must lie in [1/2, 1]".into());
        }
        match (&self.rho_bar, &self.lambda_plus, &self.lambda_minus) {
            (Some(rho), None, None) => {
                for (i, r) in rho.iter().enumerate() {
                    if !(*r > 0.0 && *r < 1.0) {
                        err(&format!("rho_bar[{i}]"), "must lie strictly in (0, 1)".into());
                    }
                }
                if !(self.reservoir_scale > 0.0) {
                    err("reservoir_scale", "must be strictly positive".into());
                }
            }
            (None, Some(plus), Some(minus)) => {
                if plus.len() != 3 || minus.len() != 3 {
                    err("lambda_plus", "expected one rate per corner (3 values)".into());
                }
                for (i, v) in plus.iter().enumerate() {
                    if !(*v > 0.0) {
                        err(&format!("lambda_plus[{i}]"), "must be strictly positive".into());
                    }
                }
                for (i, v) in minus.iter().enumerate() {
                    if !(*v > 0.0) {
                        err(&format!("lambda_minus[{i}]"), "must be strictly positive".into());
                    }
                }
            }
            (None, None, None) => {
                if self.kind != Kind::BuildGraph {
                    err("rho_bar", "reservoirs required: rho_bar or lambda_plus/minus".into());
                }
            }
            _ => err(
                "rho_bar",
                "give either rho_bar (+ reservoir_scale) or lambda_plus and lambda_minus".into(),
            ),
        }
        if !self.sample_times.windows(2).all(|w| w[0] <= w[1]) {
            err("sample_times", "must be sorted".into());
        }
        if self.sample_times.iter().any(|&t| t < 0.0 || t > self.t_end) {
            err("sample_times", format!("must lie within [0, {}]", self.t_end));
        }
        if matches!(self.kind, Kind::Simulate | Kind::LlnExperiment) && self.replicas < 1 {
            err("replicas", "at least one replica".into());
        }
        if self.kind == Kind::LlnExperiment && self.replicas < 2 {
            err("replicas", "ensemble statistics need at least two replicas".into());
        }
        if let FieldDescriptor::Table { entries } = &self.field {
            if entries.is_empty() {
                err("field.entries", "table field needs at least one entry".into());
            }
        }
        if self.kind == Kind::Rate {
            if let Some(files) = &self.trajectory {
                if !files.density.exists() {
                    err("trajectory.density", format!("file {:?} does not exist", files.density));
                }
                if !files.flux.exists() {
                    err("trajectory.flux", format!("file {:?} does not exist", files.flux));
                }
            }
        }
        match self.initial_density {
            InitialDensity::Constant { constant } => {
                if !(0.0..=1.0).contains(&constant) {
                    err("initial_density.constant", "must lie in [0, 1]".into());
                }
                if let Some(rho) = &self.rho_bar {
                    if rho.iter().any(|r| (r - constant).abs() > 1e-12) {
                        err(
                            "initial_density.constant",
                            "initial data must match the reservoir densities at the boundary; \
                             use interior_constant or harmonic instead"
                                .into(),
                        );
                    }
                }
            }
            InitialDensity::InteriorConstant { interior_constant } => {
                if !(0.0..=1.0).contains(&interior_constant) {
                    err("initial_density.interior_constant", "must lie in [0, 1]".into());
                }
            }
            InitialDensity::Named(_) => {}
        }
        errors
    }

    pub fn boundary_rates(&self, g: &WeightedGraph) -> Result<BoundaryRates, hydro_core::Error> {
        match (&self.rho_bar, &self.lambda_plus, &self.lambda_minus) {
            (Some(rho), None, None) => {
                BoundaryRates::from_rho_bar(g, rho, self.reservoir_scale)
            }
            (None, Some(plus), Some(minus)) => {
                BoundaryRates::new(g, plus.clone(), minus.clone())
            }
            _ => Err(hydro_core::Error::InvalidRates(
                "reservoirs required: rho_bar or lambda_plus/minus".into(),
            )),
        }
    }

    /// Reservoir densities in corner order.
    pub fn reservoir_densities(&self, g: &WeightedGraph) -> Result<Vec<f64>, hydro_core::Error> {
        Ok(self.boundary_rates(g)?.rho_bar_all())
    }

    pub fn boundary_values(&self, g: &WeightedGraph) -> Result<BoundaryValues, hydro_core::Error> {
        let rho = self.reservoir_densities(g)?;
        Ok(g.boundary().iter().copied().zip(rho).collect())
    }

    pub fn field_spec(&self, g: &WeightedGraph) -> Result<FieldSpec, hydro_core::Error> {
        match &self.field {
            FieldDescriptor::Zero => Ok(FieldSpec::zero(g, self.t_end)),
            FieldDescriptor::Harmonic { corners, shape } => {
                FieldSpec::harmonic(g, *corners, *shape, self.t_end)
            }
            FieldDescriptor::Table { entries } => {
                let mut by_time: BTreeMap<u64, VertexFunction> = BTreeMap::new();
                let mut times: Vec<f64> = Vec::new();
                for e in entries {
                    let key = e.t.to_bits();
                    by_time.entry(key).or_insert_with(|| {
                        times.push(e.t);
                        VertexFunction::zeros(g.vertex_count())
                    });
                    if e.vertex as usize >= g.vertex_count() {
                        return Err(hydro_core::Error::InvalidInput(format!(
                            "table vertex {} out of range",
                            e.vertex
                        )));
                    }
                    by_time.get_mut(&key).unwrap()[e.vertex] = e.value;
                }
                times.sort_by(f64::total_cmp);
                let profiles = times.iter().map(|t| by_time[&t.to_bits()].clone()).collect();
                FieldSpec::table(g, times, profiles, self.t_end)
            }
        }
    }

    /// Initial density profile, compatible with the reservoirs.
    pub fn initial_profile(&self, g: &WeightedGraph) -> Result<VertexFunction, hydro_core::Error> {
        match &self.initial_density {
            InitialDensity::Named(InitialDensityName::Harmonic) => {
                hydro_core::calculus::solve_harmonic(g, &self.boundary_values(g)?)
            }
            InitialDensity::Constant { constant } => {
                Ok(VertexFunction::constant(g.vertex_count(), *constant))
            }
            InitialDensity::InteriorConstant { interior_constant } => {
                let mut profile =
                    VertexFunction::constant(g.vertex_count(), *interior_constant);
                for (&a, rho) in g.boundary().iter().zip(self.reservoir_densities(g)?) {
                    profile[a] = rho;
                }
                Ok(profile)
            }
        }
    }
}
