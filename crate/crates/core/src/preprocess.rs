//! Cut-edge contraction.
//!
//! An edge `u -> v` is a cut-edge when `u` has exactly one child and `v`
//! exactly one parent. Contracting it fuses the two layers into one whose
//! work is the sum of both; the data carried by the edge never leaves the
//! server and disappears from the transfer set. Contraction repeats until no
//! cut-edge is left, which collapses every maximal run of cut-edges into a
//! single layer.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::evaluator::Assignment;
use crate::model::{DagWorkload, Dataset, Layer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub original_layer_count: usize,
    pub merged_layer_count: usize,
    /// Merged layer id to the original layer ids it contains, in execution order.
    pub merge_map: BTreeMap<usize, Vec<usize>>,
    /// Cut-edges left in place because their endpoints are pinned to different servers.
    pub refused: Vec<(usize, usize)>,
}

impl MergeReport {
    /// Fraction of layers removed by the merge.
    pub fn compression(&self) -> f64 {
        if self.original_layer_count == 0 {
            return 0.0;
        }
        1.0 - self.merged_layer_count as f64 / self.original_layer_count as f64
    }
}

/// Edges `(u, v)` (by layer id) with out-degree(u) = 1 and in-degree(v) = 1.
pub fn find_cut_edges(dag: &DagWorkload) -> Vec<(usize, usize)> {
    let adj = dag.adjacency();
    let mut cuts = Vec::new();
    for (u, children) in adj.children.iter().enumerate() {
        if let [v] = children[..] {
            if adj.parents[v].len() == 1 {
                cuts.push((dag.layers[u].id, dag.layers[v].id));
            }
        }
    }
    cuts
}

/// Contracts cut-edges until none remain (apart from refused ones).
///
/// The DAG must be valid. Merged layers take the smallest id of their
/// constituents and inherit any pin among them.
pub fn merge(dag: &DagWorkload) -> (DagWorkload, MergeReport) {
    let adj = dag.adjacency();
    let order = dag.topological_order().expect("merge needs a valid DAG");
    let n = dag.layers.len();
    let mut group_of = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut refused = Vec::new();

    for &head in &order {
        if group_of[head] != usize::MAX {
            continue;
        }
        let g = groups.len();
        let mut members = vec![head];
        group_of[head] = g;
        let mut pin = dag.layers[head].pinned_server;
        let mut tail = head;
        while let [v] = adj.children[tail][..] {
            if adj.parents[v].len() != 1 {
                break;
            }
            let vpin = dag.layers[v].pinned_server;
            if let (Some(a), Some(b)) = (pin, vpin) {
                if a != b {
                    refused.push((dag.layers[tail].id, dag.layers[v].id));
                    break;
                }
            }
            pin = pin.or(vpin);
            group_of[v] = g;
            members.push(v);
            tail = v;
        }
        groups.push(members);
    }

    let merged_id: Vec<usize> = groups.iter().map(|m| m.iter().map(|&i| dag.layers[i].id).min().unwrap()).collect();
    let id_to_pos = dag.layer_index();
    let group_of_id = |id: usize| group_of[id_to_pos[&id]];

    // A dataset is internal when it flows only between members of one group.
    let internal: HashSet<usize> = dag
        .datasets
        .iter()
        .filter(|d| match d.producer {
            Some(p) if !d.consumers.is_empty() => {
                let g = group_of_id(p);
                d.consumers.iter().all(|&c| group_of_id(c) == g)
            }
            _ => false,
        })
        .map(|d| d.id)
        .collect();

    // Keep the original relative order of group heads.
    let mut group_order: Vec<usize> = (0..groups.len()).collect();
    group_order.sort_by_key(|&g| groups[g].iter().min().copied());

    let layers = group_order
        .iter()
        .map(|&g| {
            let members = &groups[g];
            let collect = |pick: fn(&Layer) -> &Vec<usize>| -> Vec<usize> {
                let mut seen = BTreeSet::new();
                members
                    .iter()
                    .flat_map(|&i| pick(&dag.layers[i]).iter().copied())
                    .filter(|d| !internal.contains(d) && seen.insert(*d))
                    .collect()
            };
            Layer {
                id: merged_id[g],
                dag_id: dag.id,
                compute_amount: members.iter().map(|&i| dag.layers[i].compute_amount).sum(),
                inputs: collect(|l| &l.inputs),
                outputs: collect(|l| &l.outputs),
                pinned_server: members.iter().find_map(|&i| dag.layers[i].pinned_server),
            }
        })
        .collect();

    let datasets = dag
        .datasets
        .iter()
        .filter(|d| !internal.contains(&d.id))
        .map(|d| {
            let mut consumers: Vec<usize> = Vec::new();
            for &c in &d.consumers {
                let id = merged_id[group_of_id(c)];
                if !consumers.contains(&id) {
                    consumers.push(id);
                }
            }
            Dataset { id: d.id, size: d.size, producer: d.producer.map(|p| merged_id[group_of_id(p)]), consumers }
        })
        .collect();

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for &(u, v) in &dag.edges {
        let (gu, gv) = (group_of_id(u), group_of_id(v));
        if gu != gv && seen.insert((gu, gv)) {
            edges.push((merged_id[gu], merged_id[gv]));
        }
    }

    let merged = DagWorkload {
        id: dag.id,
        layers,
        edges,
        datasets,
        deadline: dag.deadline,
        origin_device: dag.origin_device,
    };
    let merge_map = groups
        .iter()
        .enumerate()
        .map(|(g, members)| (merged_id[g], members.iter().map(|&i| dag.layers[i].id).collect()))
        .collect();
    let report = MergeReport {
        original_layer_count: n,
        merged_layer_count: groups.len(),
        merge_map,
        refused,
    };
    (merged, report)
}

/// Maps a placement of merged DAGs back onto the original DAGs: every
/// constituent runs on its merged layer's server, and constituents are
/// dispatched back to back in chain order.
pub fn expand_assignment(
    merged_assignment: &Assignment,
    merged: &[DagWorkload],
    reports: &[MergeReport],
    original: &[DagWorkload],
) -> Assignment {
    assert_eq!(merged.len(), original.len());
    assert_eq!(merged.len(), reports.len());
    // global index of each original layer
    let mut original_pos: HashMap<(usize, usize), usize> = HashMap::new();
    let mut base = 0;
    for (k, dag) in original.iter().enumerate() {
        for (i, l) in dag.layers.iter().enumerate() {
            original_pos.insert((k, l.id), base + i);
        }
        base += dag.layers.len();
    }
    let total = base;
    let mut servers = vec![0; total];
    let mut keys: Vec<(usize, usize, usize)> = Vec::with_capacity(total);
    let mut g = 0;
    for (k, dag) in merged.iter().enumerate() {
        for l in &dag.layers {
            for (step, id) in reports[k].merge_map[&l.id].iter().enumerate() {
                let pos = original_pos[&(k, *id)];
                servers[pos] = merged_assignment.servers[g];
                keys.push((merged_assignment.orders[g], step, pos));
            }
            g += 1;
        }
    }
    keys.sort_unstable();
    let mut orders = vec![0; total];
    for (rank, &(_, _, pos)) in keys.iter().enumerate() {
        orders[pos] = rank;
    }
    Assignment { servers, orders }
}

/// Merges every DAG of a workload set.
pub fn merge_all(dags: &[DagWorkload]) -> (Vec<DagWorkload>, Vec<MergeReport>) {
    dags.iter().map(merge).unzip()
}

/// Number of particle dimensions before and after merging.
pub fn dimensionality(dags: &[DagWorkload]) -> (usize, usize) {
    let merged: usize = dags.iter().map(|d| merge(d).1.merged_layer_count).sum();
    (dags.iter().map(DagWorkload::len).sum(), merged)
}
