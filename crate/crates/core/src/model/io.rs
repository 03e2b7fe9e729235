//! JSON documents for server pools and workloads.
//!
//! Environment files carry prices in the units of published price lists
//! (dollars per hour, dollars per GB); they are converted to per-second and
//! per-MB rates on load and back on write.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DagWorkload, Environment, LinkSpec, ModelError, ServerSpec, Tier};

const SECONDS_PER_HOUR: f64 = 3600.0;
const MB_PER_GB: f64 = 1000.0;

#[derive(Serialize, Deserialize)]
struct EnvironmentDoc {
    servers: Vec<ServerDoc>,
    links: Vec<Vec<LinkDoc>>,
}

#[derive(Serialize, Deserialize)]
struct ServerDoc {
    id: usize,
    power: f64,
    cost_per_hour: f64,
    tier: Tier,
}

#[derive(Serialize, Deserialize)]
struct LinkDoc {
    bandwidth: f64,
    cost_per_gb: f64,
}

#[derive(Serialize, Deserialize)]
struct WorkloadDoc {
    dags: Vec<DagWorkload>,
}

/// Undo the unit conversion noise so that written files reproduce the
/// decimal values they were loaded from.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn environment_from_json(text: &str) -> Result<Environment, ModelError> {
    let doc: EnvironmentDoc = serde_json::from_str(text)?;
    let servers = doc
        .servers
        .into_iter()
        .map(|s| ServerSpec {
            id: s.id,
            power: s.power,
            cost_rate: s.cost_per_hour / SECONDS_PER_HOUR,
            tier: s.tier,
        })
        .collect();
    let links = doc
        .links
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|l| LinkSpec { bandwidth: l.bandwidth, transfer_cost: l.cost_per_gb / MB_PER_GB })
                .collect()
        })
        .collect();
    Environment::new(servers, links)
}

pub fn environment_to_json(env: &Environment) -> String {
    let doc = EnvironmentDoc {
        servers: env
            .servers()
            .iter()
            .map(|s| ServerDoc {
                id: s.id,
                power: s.power,
                cost_per_hour: round_sig(s.cost_rate * SECONDS_PER_HOUR),
                tier: s.tier,
            })
            .collect(),
        links: env
            .links()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|l| LinkDoc {
                        bandwidth: l.bandwidth,
                        cost_per_gb: round_sig(l.transfer_cost * MB_PER_GB),
                    })
                    .collect()
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("environment serializes");
    out.push('\n');
    out
}

pub fn load_environment(path: impl AsRef<Path>) -> Result<Environment, ModelError> {
    environment_from_json(&read(path.as_ref())?)
}

pub fn write_environment(env: &Environment, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(path.as_ref(), &environment_to_json(env))
}

/// Parses and validates a workload document. Every DAG is checked on its
/// own; DAG ids must be unique.
pub fn workloads_from_json(text: &str) -> Result<Vec<DagWorkload>, ModelError> {
    let doc: WorkloadDoc = serde_json::from_str(text)?;
    let mut seen = std::collections::HashSet::new();
    for dag in &doc.dags {
        if !seen.insert(dag.id) {
            return Err(ModelError::InvalidWorkload { dag: dag.id, detail: "duplicate dag id".into() });
        }
        dag.validate()?;
    }
    Ok(doc.dags)
}

pub fn workloads_to_json(dags: &[DagWorkload]) -> String {
    let doc = WorkloadDoc { dags: dags.to_vec() };
    let mut out = serde_json::to_string_pretty(&doc).expect("workloads serialize");
    out.push('\n');
    out
}

pub fn load_workloads(path: impl AsRef<Path>) -> Result<Vec<DagWorkload>, ModelError> {
    workloads_from_json(&read(path.as_ref())?)
}

pub fn write_workloads(dags: &[DagWorkload], path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(path.as_ref(), &workloads_to_json(dags))
}

fn read(path: &Path) -> Result<String, ModelError> {
    fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), ModelError> {
    fs::write(path, text).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
}
