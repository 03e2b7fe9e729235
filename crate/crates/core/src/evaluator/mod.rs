//! Decoding of a placement into a timed schedule, plus its monetary cost.
//!
//! Layers are dispatched one at a time: among the layers whose parents have
//! all been dispatched, the one with the smallest order value goes next.
//! A dispatched layer starts once its server's lease has expired and every
//! parent's data has arrived. Afterwards the server stays leased for the
//! layer's run time plus the time needed to ship its outputs to children
//! placed elsewhere.

mod oracle;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DagWorkload, Dataset, Environment, Layer, ModelError, ServerSpec};

pub use oracle::{brute_force_best, OracleOutcome, ORACLE_MAX_LAYERS, ORACLE_MAX_SERVERS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no route from server {from} to server {to}")]
    NoRoute { from: usize, to: usize },
    #[error("assignment does not fit the instance: {0}")]
    InvalidAssignment(String),
    #[error("instance too large for enumeration: {layers} layers, {servers} servers")]
    InstanceTooLarge { layers: usize, servers: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Seconds needed to run `layer` on `server`.
pub fn exec_time(layer: &Layer, server: &ServerSpec) -> f64 {
    layer.compute_amount / server.power
}

/// Seconds needed to move `dataset` between two servers; free on the same server.
pub fn trans_time(dataset: &Dataset, from: usize, to: usize, env: &Environment) -> Result<f64, EvalError> {
    if from == to {
        return Ok(0.0);
    }
    let bw = env.link(from, to).bandwidth;
    if bw <= 0.0 {
        return Err(EvalError::NoRoute { from, to });
    }
    Ok(dataset.size / bw)
}

/// Per-layer server and dispatch priority for every layer of every DAG.
///
/// Layers are indexed globally: the layers of the first DAG in their
/// stored order, then those of the second, and so on. `orders` must be a
/// permutation of `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub servers: Vec<usize>,
    pub orders: Vec<usize>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct DataEdge {
    pub layer: usize,
    /// Sum of the dataset sizes carried by the edge, MB.
    pub payload: f64,
    /// `(dataset id, MB)` pairs behind `payload`.
    pub datasets: Vec<(usize, f64)>,
}

/// One layer of the flattened multi-DAG instance.
#[derive(Debug, Clone)]
pub struct FlatLayer {
    pub dag: usize,
    pub id: usize,
    pub compute: f64,
    pub pinned: Option<usize>,
    pub parents: Vec<DataEdge>,
    pub children: Vec<DataEdge>,
}

/// A set of DAGs flattened into one global layer index space.
#[derive(Debug, Clone)]
pub struct Instance {
    layers: Vec<FlatLayer>,
    ranges: Vec<Range<usize>>,
    deadlines: Vec<f64>,
    dag_ids: Vec<usize>,
}

impl Instance {
    pub fn new(dags: &[DagWorkload]) -> Result<Self, EvalError> {
        let mut layers = Vec::new();
        let mut ranges = Vec::with_capacity(dags.len());
        for (k, dag) in dags.iter().enumerate() {
            dag.validate()?;
            let base = layers.len();
            let adj = dag.adjacency();
            let idx = dag.layer_index();
            let mut flows: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
            for d in &dag.datasets {
                if let Some(p) = d.producer {
                    for c in &d.consumers {
                        flows.entry((idx[&p], idx[c])).or_default().push((d.id, d.size));
                    }
                }
            }
            let edge = |u: usize, v: usize, other: usize| {
                let datasets = flows.get(&(u, v)).cloned().unwrap_or_default();
                DataEdge { layer: base + other, payload: datasets.iter().map(|d| d.1).sum(), datasets }
            };
            for (i, l) in dag.layers.iter().enumerate() {
                layers.push(FlatLayer {
                    dag: k,
                    id: l.id,
                    compute: l.compute_amount,
                    pinned: l.pinned_server,
                    parents: adj.parents[i].iter().map(|&p| edge(p, i, p)).collect(),
                    children: adj.children[i].iter().map(|&c| edge(i, c, c)).collect(),
                });
            }
            ranges.push(base..layers.len());
        }
        Ok(Self {
            layers,
            ranges,
            deadlines: dags.iter().map(|d| d.deadline).collect(),
            dag_ids: dags.iter().map(|d| d.id).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[FlatLayer] {
        &self.layers
    }

    pub fn dag_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn dag_range(&self, dag: usize) -> Range<usize> {
        self.ranges[dag].clone()
    }

    pub fn deadlines(&self) -> &[f64] {
        &self.deadlines
    }

    pub fn set_deadlines(&mut self, deadlines: &[f64]) {
        assert_eq!(deadlines.len(), self.deadlines.len());
        self.deadlines.copy_from_slice(deadlines);
    }

    /// Global topological order releasing the lowest index first.
    pub fn topological_order(&self) -> Vec<usize> {
        let adj = crate::model::Adjacency {
            parents: self.layers.iter().map(|l| l.parents.iter().map(|e| e.layer).collect()).collect(),
            children: self.layers.iter().map(|l| l.children.iter().map(|e| e.layer).collect()).collect(),
        };
        crate::model::kahn_lowest_first(&adj).expect("validated DAGs are acyclic")
    }

    pub fn check_assignment(&self, a: &Assignment, env: &Environment) -> Result<(), EvalError> {
        let n = self.len();
        let bad = |m: String| Err(EvalError::InvalidAssignment(m));
        if a.servers.len() != n || a.orders.len() != n {
            return bad(format!("expected {n} layers, got {} servers and {} orders", a.servers.len(), a.orders.len()));
        }
        let mut seen = vec![false; n];
        for &o in &a.orders {
            if o >= n || std::mem::replace(&mut seen[o], true) {
                return bad("orders are not a permutation".into());
            }
        }
        for (k, l) in self.layers.iter().enumerate() {
            if a.servers[k] >= env.len() {
                return bad(format!("layer {k} placed on unknown server {}", a.servers[k]));
            }
            if let Some(p) = l.pinned {
                if a.servers[k] != p {
                    return bad(format!("layer {k} is pinned to server {p}"));
                }
            }
        }
        Ok(())
    }

    /// Full decode with a per-layer, per-server and per-transfer record.
    pub fn simulate(&self, a: &Assignment, env: &Environment) -> Result<Schedule, EvalError> {
        self.check_assignment(a, env)?;
        let mut rec = Recorder::Full(Box::new(Trace { start: vec![0.0; self.len()], ..Trace::default() }));
        let out = self.decode(env, &a.servers, &a.orders, &mut rec);
        let Recorder::Full(r) = rec else { unreachable!() };
        let Trace { start, end, dispatch, transfers } = *r;
        let layers = (0..self.len())
            .map(|k| LayerTiming {
                dag: self.dag_ids[self.layers[k].dag],
                layer: self.layers[k].id,
                server: a.servers[k],
                start: start[k],
                end: end[k],
            })
            .collect();
        let servers = out
            .on
            .iter()
            .zip(&out.lease)
            .map(|(on, &lease)| on.map(|on| ServerUsage { on, off: lease }))
            .collect();
        Ok(Schedule {
            layers,
            dag_completion: out.completion,
            deadlines: self.deadlines.clone(),
            servers,
            transfers,
            dispatch_order: dispatch,
            cost: CostBreakdown::new(out.compute_cost, out.transfer_cost),
            feasible: out.feasible,
        })
    }

    /// Decode without building a record; for search loops. The assignment
    /// is trusted to fit the instance.
    pub fn evaluate(&self, env: &Environment, servers: &[usize], orders: &[usize]) -> Evaluation {
        let out = self.decode(env, servers, orders, &mut Recorder::None);
        Evaluation {
            feasible: out.feasible,
            total_cost: out.compute_cost + out.transfer_cost,
            completion_sum: out.completion.iter().sum(),
            makespan: out.completion.iter().copied().fold(0.0, f64::max),
        }
    }

    fn decode(&self, env: &Environment, servers: &[usize], orders: &[usize], rec: &mut Recorder) -> Decoded {
        let n = self.len();
        let m = env.len();
        let mut pending: Vec<usize> = self.layers.iter().map(|l| l.parents.len()).collect();
        let mut ready: BinaryHeap<Reverse<(usize, usize)>> =
            (0..n).filter(|&k| pending[k] == 0).map(|k| Reverse((orders[k], k))).collect();
        let mut end = vec![0.0; n];
        let mut lease = vec![0.0; m];
        let mut on: Vec<Option<f64>> = vec![None; m];
        let mut unroutable = vec![false; self.ranges.len()];
        let mut transfer_cost = 0.0;

        while let Some(Reverse((_, k))) = ready.pop() {
            let layer = &self.layers[k];
            let s = servers[k];
            let mut start = lease[s];
            for e in &layer.parents {
                let ps = servers[e.layer];
                let mut arrival = end[e.layer];
                if ps != s {
                    let link = env.link(ps, s);
                    if link.bandwidth > 0.0 {
                        arrival += e.payload / link.bandwidth;
                    } else {
                        unroutable[layer.dag] = true;
                    }
                    for &(_, size) in &e.datasets {
                        transfer_cost += link.transfer_cost * size;
                    }
                    if let Recorder::Full(r) = rec {
                        r.record_transfers(layer.dag, e, k, ps, s, &link, self);
                    }
                }
                start = f64::max(start, arrival);
            }
            let finish = start + layer.compute / env.server(s).power;
            let mut outbound = 0.0;
            for e in &layer.children {
                let cs = servers[e.layer];
                if cs != s {
                    let bw = env.link(s, cs).bandwidth;
                    if bw > 0.0 {
                        outbound += e.payload / bw;
                    }
                }
                pending[e.layer] -= 1;
                if pending[e.layer] == 0 {
                    ready.push(Reverse((orders[e.layer], e.layer)));
                }
            }
            end[k] = finish;
            lease[s] = finish + outbound;
            on[s].get_or_insert(start);
            if let Recorder::Full(r) = rec {
                r.start[k] = start;
                r.dispatch.push(k);
            }
        }

        let completion: Vec<f64> = self
            .ranges
            .iter()
            .enumerate()
            .map(|(d, r)| {
                if unroutable[d] {
                    f64::INFINITY
                } else {
                    end[r.clone()].iter().copied().fold(0.0, f64::max)
                }
            })
            .collect();
        let feasible = completion.iter().zip(&self.deadlines).all(|(c, d)| c <= d);
        let compute_cost = on
            .iter()
            .enumerate()
            .filter_map(|(s, on)| on.map(|on| env.server(s).cost_rate * (lease[s] - on)))
            .sum();
        if let Recorder::Full(r) = rec {
            r.end = end;
        }
        Decoded { completion, feasible, compute_cost, transfer_cost, lease, on }
    }
}

struct Decoded {
    completion: Vec<f64>,
    feasible: bool,
    compute_cost: f64,
    transfer_cost: f64,
    lease: Vec<f64>,
    on: Vec<Option<f64>>,
}

enum Recorder {
    None,
    Full(Box<Trace>),
}

#[derive(Default)]
struct Trace {
    start: Vec<f64>,
    end: Vec<f64>,
    dispatch: Vec<usize>,
    transfers: Vec<TransferRecord>,
}

impl Trace {
    #[allow(clippy::too_many_arguments)]
    fn record_transfers(
        &mut self,
        dag: usize,
        e: &DataEdge,
        consumer: usize,
        from: usize,
        to: usize,
        link: &crate::model::LinkSpec,
        inst: &Instance,
    ) {
        for &(dataset, size) in &e.datasets {
            self.transfers.push(TransferRecord {
                dag: inst.dag_ids[dag],
                dataset,
                producer: inst.layers[e.layer].id,
                consumer: inst.layers[consumer].id,
                from,
                to,
                size,
                time: if link.bandwidth > 0.0 { size / link.bandwidth } else { f64::INFINITY },
                cost: link.transfer_cost * size,
            });
        }
    }
}

/// Scalar summary of a decode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub feasible: bool,
    pub total_cost: f64,
    /// Sum of DAG completion times; infinite if some DAG needs a missing route.
    pub completion_sum: f64,
    pub makespan: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub compute_cost: f64,
    pub transfer_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(compute_cost: f64, transfer_cost: f64) -> Self {
        Self { compute_cost, transfer_cost, total: compute_cost + transfer_cost }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTiming {
    pub dag: usize,
    pub layer: usize,
    pub server: usize,
    pub start: f64,
    pub end: f64,
}

/// On-interval of a used server; `off` is the final lease time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerUsage {
    pub on: f64,
    pub off: f64,
}

/// One dataset moved between two different servers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub dag: usize,
    pub dataset: usize,
    pub producer: usize,
    pub consumer: usize,
    /// Origin server of the dataset.
    pub from: usize,
    /// Server of the consuming layer.
    pub to: usize,
    pub size: f64,
    pub time: f64,
    pub cost: f64,
}

/// A fully decoded placement. Layer entries follow the global layer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub layers: Vec<LayerTiming>,
    pub dag_completion: Vec<f64>,
    pub deadlines: Vec<f64>,
    pub servers: Vec<Option<ServerUsage>>,
    pub transfers: Vec<TransferRecord>,
    pub dispatch_order: Vec<usize>,
    pub cost: CostBreakdown,
    pub feasible: bool,
}

impl Schedule {
    pub fn makespan(&self) -> f64 {
        self.dag_completion.iter().copied().fold(0.0, f64::max)
    }

    pub fn completion_sum(&self) -> f64 {
        self.dag_completion.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

/// Cost of a schedule recomputed from its server intervals and transfer log.
pub fn total_cost(schedule: &Schedule, env: &Environment) -> CostBreakdown {
    let compute = schedule
        .servers
        .iter()
        .enumerate()
        .filter_map(|(s, u)| u.map(|u| env.server(s).cost_rate * (u.off - u.on)))
        .sum();
    let transfer = schedule.transfers.iter().map(|t| t.cost).sum();
    CostBreakdown::new(compute, transfer)
}

/// True iff every DAG completes by its deadline.
pub fn check_deadlines(schedule: &Schedule, dags: &[DagWorkload]) -> bool {
    schedule.dag_completion.iter().zip(dags).all(|(c, d)| *c <= d.deadline)
}

/// Convenience wrapper building the instance on the fly.
pub fn simulate(a: &Assignment, dags: &[DagWorkload], env: &Environment) -> Result<Schedule, EvalError> {
    Instance::new(dags)?.simulate(a, env)
}
