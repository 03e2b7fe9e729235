//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use offload_core::baselines::GaParams;
use offload_core::model::{load_environment, load_workloads};
use offload_core::model::presets::{self, generate_workload_in, Arch};
use offload_core::model::Tier;
use offload_core::psoga::PsoParams;
use offload_core::{DagWorkload, Environment};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The full 20-server pool.
    Standard,
    /// 4 devices, 2 edge servers, 2 cloud servers.
    Desk,
    Tiny,
    Quad,
}

impl Preset {
    pub fn environment(self) -> Environment {
        match self {
            Preset::Standard => presets::standard_environment(),
            Preset::Desk => presets::desk_environment(),
            Preset::Tiny => presets::tiny_environment(),
            Preset::Quad => presets::quad_environment(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentSource {
    Preset(Preset),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub arch: Arch,
    #[serde(default = "one")]
    pub per_device: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadSource {
    /// Synthetic DAGs rooted at every device of the pool.
    Generate(Vec<WorkloadSpec>),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Psoga,
    Prepso,
    Ga,
    Greedy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Psoga, Algorithm::Prepso, Algorithm::Ga, Algorithm::Greedy];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Psoga => "psoga",
            Algorithm::Prepso => "prepso",
            Algorithm::Ga => "ga",
            Algorithm::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// Multipliers applied to the power of every edge or cloud server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerScale {
    pub edge: f64,
    pub cloud: f64,
}

impl Default for PowerScale {
    fn default() -> Self {
        Self { edge: 1.0, cloud: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSource,
    #[serde(default)]
    pub power_scale: PowerScale,
    pub workloads: WorkloadSource,
    #[serde(default = "default_ratios")]
    pub deadline_ratios: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "fifty")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub pso: PsoParams,
    #[serde(default)]
    pub ga: GaParams,
    /// Report cells with no feasible trial as negative numbers.
    #[serde(default)]
    pub signed_infeasible: bool,
}

fn default_ratios() -> Vec<f64> {
    offload_core::heft::DeadlinePolicy::DEFAULT_RATIOS.to_vec()
}

fn fifty() -> usize {
    50
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let EnvironmentSource::File(p) = &mut cfg.environment {
            resolve(p);
        }
        if let WorkloadSource::File(p) = &mut cfg.workloads {
            resolve(p);
        }
        resolve(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if self.deadline_ratios.is_empty() {
            return bad("at least one deadline ratio is required".into());
        }
        if let Some(r) = self.deadline_ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return bad(format!("deadline ratio {r} is not positive"));
        }
        if !(self.power_scale.edge > 0.0 && self.power_scale.cloud > 0.0) {
            return bad("power scale factors must be positive".into());
        }
        if let WorkloadSource::Generate(specs) = &self.workloads {
            if specs.is_empty() || specs.iter().all(|s| s.per_device == 0) {
                return bad("workload list generates no DAG".into());
            }
        }
        self.pso.validate().map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn build_environment(&self) -> Result<Environment, BenchError> {
        let env = match &self.environment {
            EnvironmentSource::Preset(p) => p.environment(),
            EnvironmentSource::File(path) => load_environment(path)?,
        };
        let env = env.with_power_scaled(Tier::Edge, self.power_scale.edge)?;
        Ok(env.with_power_scaled(Tier::Cloud, self.power_scale.cloud)?)
    }

    /// Workloads for `env`. Generated DAGs are numbered device by device,
    /// spec by spec; DAG `k` uses seed `seed + k`.
    pub fn build_workloads(&self, env: &Environment) -> Result<Vec<DagWorkload>, BenchError> {
        match &self.workloads {
            WorkloadSource::File(path) => {
                let dags = load_workloads(path)?;
                for d in &dags {
                    d.validate_against(env)?;
                }
                Ok(dags)
            }
            WorkloadSource::Generate(specs) => {
                let mut dags = Vec::new();
                for device in env.servers_of_tier(Tier::Device) {
                    for spec in specs {
                        for _ in 0..spec.per_device {
                            let id = dags.len();
                            let dag = generate_workload_in(env, spec.arch, device, self.seed + id as u64)?;
                            dags.push(dag.with_id(id));
                        }
                    }
                }
                Ok(dags)
            }
        }
    }
}
