//! Domain types for the hybrid cloud/edge/device pool and the layered DAG
//! workloads placed onto it.

mod io;
pub mod presets;
pub mod random;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    environment_from_json, environment_to_json, load_environment, load_workloads,
    workloads_from_json, workloads_to_json, write_environment, write_workloads,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("dag {dag}: precedence cycle detected")]
    Cycle { dag: usize },
    #[error("dag {dag}: dangling reference: {detail}")]
    DanglingReference { dag: usize, detail: String },
    #[error("dag {dag}: no input layer is pinned to origin device {device}")]
    MissingPinnedInput { dag: usize, device: usize },
    #[error("dag {dag}: {detail}")]
    InvalidWorkload { dag: usize, detail: String },
    #[error("server {server} is not a device-tier server")]
    NotADevice { server: usize },
}

/// Server class. The discriminants are the tier codes used in tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Cloud = 0,
    Edge = 1,
    Device = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerSpec {
    pub id: usize,
    /// Compute capacity units per second.
    pub power: f64,
    /// Dollars per second while the server is on.
    pub cost_rate: f64,
    pub tier: Tier,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkSpec {
    /// MB per second; zero means there is no route.
    pub bandwidth: f64,
    /// Dollars per MB moved over the link.
    pub transfer_cost: f64,
}

/// A validated server pool together with its pairwise link matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    servers: Vec<ServerSpec>,
    links: Vec<Vec<LinkSpec>>,
}

impl Environment {
    pub fn new(servers: Vec<ServerSpec>, links: Vec<Vec<LinkSpec>>) -> Result<Self, ModelError> {
        let env = Self { servers, links };
        env.validate()?;
        Ok(env)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidEnvironment(msg));
        let n = self.servers.len();
        if n == 0 {
            return bad("the server pool is empty".into());
        }
        for (i, s) in self.servers.iter().enumerate() {
            if s.id != i {
                return bad(format!("server at position {i} has id {}", s.id));
            }
            if !(s.power.is_finite() && s.power > 0.0) {
                return bad(format!("server {i} has non-positive power {}", s.power));
            }
            if !(s.cost_rate.is_finite() && s.cost_rate >= 0.0) {
                return bad(format!("server {i} has negative cost rate {}", s.cost_rate));
            }
        }
        if self.links.len() != n || self.links.iter().any(|row| row.len() != n) {
            return bad(format!("link matrix is not {n}x{n}"));
        }
        for i in 0..n {
            for j in 0..n {
                let l = self.links[i][j];
                if !(l.bandwidth.is_finite() && l.bandwidth >= 0.0) {
                    return bad(format!("link ({i},{j}) has invalid bandwidth {}", l.bandwidth));
                }
                if !(l.transfer_cost.is_finite() && l.transfer_cost >= 0.0) {
                    return bad(format!("link ({i},{j}) has invalid cost {}", l.transfer_cost));
                }
                if i != j
                    && self.servers[i].tier == Tier::Device
                    && self.servers[j].tier == Tier::Device
                    && l.bandwidth != 0.0
                {
                    return bad(format!("devices {i} and {j} cannot be linked directly"));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn servers(&self) -> &[ServerSpec] {
        &self.servers
    }

    pub fn server(&self, id: usize) -> &ServerSpec {
        &self.servers[id]
    }

    pub fn link(&self, from: usize, to: usize) -> LinkSpec {
        self.links[from][to]
    }

    pub fn links(&self) -> &[Vec<LinkSpec>] {
        &self.links
    }

    /// Same-server moves are always possible; otherwise a positive bandwidth is needed.
    pub fn is_routable(&self, from: usize, to: usize) -> bool {
        from == to || self.links[from][to].bandwidth > 0.0
    }

    pub fn servers_of_tier(&self, tier: Tier) -> impl Iterator<Item = usize> + '_ {
        self.servers.iter().filter(move |s| s.tier == tier).map(|s| s.id)
    }

    pub fn max_power(&self) -> f64 {
        self.servers.iter().map(|s| s.power).fold(0.0, f64::max)
    }

    /// Copy of the pool with the power of every `tier` server multiplied by `factor`.
    pub fn with_power_scaled(&self, tier: Tier, factor: f64) -> Result<Self, ModelError> {
        let mut servers = self.servers.clone();
        for s in servers.iter_mut().filter(|s| s.tier == tier) {
            s.power *= factor;
        }
        Self::new(servers, self.links.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub id: usize,
    pub dag_id: usize,
    /// Capacity-units x seconds; divided by server power to get run time.
    pub compute_amount: f64,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub outputs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned_server: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: usize,
    /// Megabytes.
    pub size: f64,
    /// Producing layer id; `None` marks initial input data.
    #[serde(default)]
    pub producer: Option<usize>,
    #[serde(default)]
    pub consumers: Vec<usize>,
}

/// One layered workload: layers, precedence edges, datasets and a deadline.
///
/// Edges and dataset endpoints refer to layer ids. Layer ids are unique
/// within a DAG but need not be contiguous (merged DAGs keep the smallest
/// constituent id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagWorkload {
    pub id: usize,
    pub layers: Vec<Layer>,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub datasets: Vec<Dataset>,
    /// Seconds.
    pub deadline: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_device: Option<usize>,
}

/// Index-based adjacency of a DAG. Children and parents are listed once
/// each, in ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl DagWorkload {
    /// Placeholder deadline for generated workloads whose real deadline is
    /// derived later from a HEFT makespan.
    pub const UNCONSTRAINED_DEADLINE: f64 = 1.0e9;

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer_index(&self) -> HashMap<usize, usize> {
        self.layers.iter().enumerate().map(|(i, l)| (l.id, i)).collect()
    }

    pub fn dataset_index(&self) -> HashMap<usize, usize> {
        self.datasets.iter().enumerate().map(|(i, d)| (d.id, i)).collect()
    }

    pub fn total_compute(&self) -> f64 {
        self.layers.iter().map(|l| l.compute_amount).sum()
    }

    /// Adjacency over layer positions. Assumes the DAG has been validated.
    pub fn adjacency(&self) -> Adjacency {
        let idx = self.layer_index();
        let n = self.layers.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            let (u, v) = (idx[&u], idx[&v]);
            children[u].push(v);
            parents[v].push(u);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { parents, children }
    }

    /// Kahn's algorithm, always releasing the lowest ready position first.
    pub fn topological_order(&self) -> Result<Vec<usize>, ModelError> {
        let adj = self.adjacency();
        kahn_lowest_first(&adj).ok_or(ModelError::Cycle { dag: self.id })
    }

    /// Total MB carried from layer position `u` to layer position `v`.
    pub fn edge_payload(&self, u: usize, v: usize) -> f64 {
        let (pu, cv) = (self.layers[u].id, self.layers[v].id);
        self.datasets
            .iter()
            .filter(|d| d.producer == Some(pu) && d.consumers.contains(&cv))
            .map(|d| d.size)
            .sum()
    }

    /// Checks every structural invariant that does not depend on a server pool.
    pub fn validate(&self) -> Result<(), ModelError> {
        let dag = self.id;
        let invalid = |detail: String| Err(ModelError::InvalidWorkload { dag, detail });
        let dangling = |detail: String| Err(ModelError::DanglingReference { dag, detail });

        if !(self.deadline.is_finite() && self.deadline > 0.0) {
            return invalid(format!("deadline must be positive, got {}", self.deadline));
        }
        let layer_idx = self.layer_index();
        if layer_idx.len() != self.layers.len() {
            return invalid("duplicate layer id".into());
        }
        let ds_idx = self.dataset_index();
        if ds_idx.len() != self.datasets.len() {
            return invalid("duplicate dataset id".into());
        }
        for l in &self.layers {
            if l.dag_id != dag {
                return invalid(format!("layer {} claims dag {}", l.id, l.dag_id));
            }
            if !(l.compute_amount.is_finite() && l.compute_amount >= 0.0) {
                return invalid(format!("layer {} has negative compute amount", l.id));
            }
            for d in l.inputs.iter().chain(&l.outputs) {
                if !ds_idx.contains_key(d) {
                    return dangling(format!("layer {} references dataset {d}", l.id));
                }
            }
        }
        let mut witnessed = HashSet::new();
        for d in &self.datasets {
            if !(d.size.is_finite() && d.size >= 0.0) {
                return invalid(format!("dataset {} has negative size", d.id));
            }
            if let Some(p) = d.producer {
                let Some(&pi) = layer_idx.get(&p) else {
                    return dangling(format!("dataset {} produced by unknown layer {p}", d.id));
                };
                if !self.layers[pi].outputs.contains(&d.id) {
                    return dangling(format!("layer {p} does not list output {}", d.id));
                }
            }
            for c in &d.consumers {
                let Some(&ci) = layer_idx.get(c) else {
                    return dangling(format!("dataset {} consumed by unknown layer {c}", d.id));
                };
                if !self.layers[ci].inputs.contains(&d.id) {
                    return dangling(format!("layer {c} does not list input {}", d.id));
                }
                if let Some(p) = d.producer {
                    if p == *c {
                        return invalid(format!("dataset {} loops on layer {p}", d.id));
                    }
                    witnessed.insert((p, *c));
                }
            }
        }
        for l in &self.layers {
            for d in &l.inputs {
                if !self.datasets[ds_idx[d]].consumers.contains(&l.id) {
                    return dangling(format!("dataset {d} does not list consumer {}", l.id));
                }
            }
            for d in &l.outputs {
                if self.datasets[ds_idx[d]].producer != Some(l.id) {
                    return dangling(format!("dataset {d} does not list producer {}", l.id));
                }
            }
        }
        let edges: HashSet<(usize, usize)> = self.edges.iter().copied().collect();
        for &(u, v) in &edges {
            if !layer_idx.contains_key(&u) || !layer_idx.contains_key(&v) {
                return dangling(format!("edge ({u},{v}) names an unknown layer"));
            }
            if !witnessed.contains(&(u, v)) {
                return invalid(format!("edge ({u},{v}) carries no dataset"));
            }
        }
        if let Some(&(u, v)) = witnessed.iter().find(|e| !edges.contains(e)) {
            return invalid(format!("dataset flow {u}->{v} has no matching edge"));
        }
        self.topological_order()?;

        if let Some(device) = self.origin_device {
            let adj = self.adjacency();
            let pinned_input = self
                .layers
                .iter()
                .enumerate()
                .any(|(i, l)| adj.parents[i].is_empty() && l.pinned_server == Some(device));
            if !self.layers.is_empty() && !pinned_input {
                return Err(ModelError::MissingPinnedInput { dag, device });
            }
        }
        Ok(())
    }

    /// Checks the server references of this DAG against a concrete pool.
    pub fn validate_against(&self, env: &Environment) -> Result<(), ModelError> {
        let dag = self.id;
        if let Some(device) = self.origin_device {
            if device >= env.len() {
                return Err(ModelError::DanglingReference {
                    dag,
                    detail: format!("origin device {device} does not exist"),
                });
            }
            if env.server(device).tier != Tier::Device {
                return Err(ModelError::NotADevice { server: device });
            }
        }
        for l in &self.layers {
            if let Some(s) = l.pinned_server {
                if s >= env.len() {
                    return Err(ModelError::DanglingReference {
                        dag,
                        detail: format!("layer {} pinned to unknown server {s}", l.id),
                    });
                }
            }
        }
        Ok(())
    }

    /// Servers a layer of this DAG may reasonably start on: the origin
    /// device and everything it can reach in one hop. Without an origin,
    /// every server.
    pub fn candidate_servers(&self, env: &Environment) -> Vec<usize> {
        match self.origin_device {
            Some(o) => (0..env.len()).filter(|&s| env.is_routable(o, s)).collect(),
            None => (0..env.len()).collect(),
        }
    }
}

/// Topological order releasing the lowest ready index first; `None` on a cycle.
pub(crate) fn kahn_lowest_first(adj: &Adjacency) -> Option<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = adj.parents.len();
    let mut indeg: Vec<usize> = adj.parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in &adj.children[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    (order.len() == n).then_some(order)
}
