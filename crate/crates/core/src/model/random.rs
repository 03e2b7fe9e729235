//! Small random instances for oracle comparisons and property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use super::presets::tier_link;
use super::{DagWorkload, Dataset, Environment, Layer, LinkSpec, ServerSpec, Tier};

/// Random pool of `2..=max_servers` servers with at least one device and
/// one non-device. Links follow the tier-pair table; each device reaches a
/// random non-empty subset of the edge servers.
pub fn random_environment<R: Rng>(rng: &mut R, max_servers: usize) -> Environment {
    let n = rng.gen_range(2..=max_servers.max(2));
    let mut tiers: Vec<Tier> = (0..n)
        .map(|_| *[Tier::Cloud, Tier::Edge, Tier::Device].choose(rng).unwrap())
        .collect();
    tiers[0] = Tier::Device;
    if tiers.iter().all(|&t| t == Tier::Device) {
        tiers[n - 1] = if rng.gen_bool(0.5) { Tier::Edge } else { Tier::Cloud };
    }
    let servers: Vec<ServerSpec> = tiers
        .iter()
        .enumerate()
        .map(|(id, &tier)| {
            let (power, per_hour) = match tier {
                Tier::Device => (rng.gen_range(1..=2) as f64, 0.0),
                Tier::Edge => (rng.gen_range(2..=8) as f64, rng.gen_range(1..=40) as f64 / 2.0),
                Tier::Cloud => (rng.gen_range(2..=16) as f64, rng.gen_range(1..=40) as f64 / 2.0),
            };
            ServerSpec { id, power, cost_rate: per_hour / 3600.0, tier }
        })
        .collect();
    let edges: Vec<usize> = (0..n).filter(|&i| tiers[i] == Tier::Edge).collect();
    let mut reach = vec![Vec::new(); n];
    for d in (0..n).filter(|&i| tiers[i] == Tier::Device) {
        for &e in &edges {
            if rng.gen_bool(0.6) {
                reach[d].push(e);
            }
        }
        if reach[d].is_empty() {
            if let Some(&e) = edges.choose(rng) {
                reach[d].push(e);
            }
        }
    }
    let mut links = vec![vec![LinkSpec::default(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let connected = match (tiers[i], tiers[j]) {
                (Tier::Device, Tier::Edge) => reach[i].contains(&j),
                (Tier::Edge, Tier::Device) => reach[j].contains(&i),
                _ => true,
            };
            if connected {
                let (bw, per_gb) = tier_link(tiers[i], tiers[j]);
                links[i][j] = LinkSpec { bandwidth: bw, transfer_cost: per_gb / 1000.0 };
            }
        }
    }
    Environment::new(servers, links).expect("random pool is valid")
}

/// Random DAG of `layers` layers rooted at `origin`. Every non-input layer
/// has one or two earlier parents; each layer emits one dataset to all of
/// its children.
pub fn random_dag<R: Rng>(rng: &mut R, id: usize, layers: usize, origin: usize, deadline: f64) -> DagWorkload {
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); layers];
    for (v, ps) in parents.iter_mut().enumerate().skip(1) {
        ps.push(rng.gen_range(0..v));
        if v >= 2 && rng.gen_bool(0.35) {
            let extra = rng.gen_range(0..v);
            if !ps.contains(&extra) {
                ps.push(extra);
            }
        }
        ps.sort_unstable();
    }
    let mut children = vec![Vec::new(); layers];
    let mut edges = Vec::new();
    for (v, ps) in parents.iter().enumerate() {
        for &u in ps {
            children[u].push(v);
            edges.push((u, v));
        }
    }
    let layers_vec = (0..layers)
        .map(|i| Layer {
            id: i,
            dag_id: id,
            compute_amount: rng.gen_range(1..=30) as f64 / 10.0,
            inputs: parents[i].clone(),
            outputs: vec![i],
            pinned_server: (i == 0).then_some(origin),
        })
        .collect();
    let datasets = (0..layers)
        .map(|i| Dataset {
            id: i,
            size: rng.gen_range(1..=20) as f64 / 10.0,
            producer: Some(i),
            consumers: children[i].clone(),
        })
        .collect();
    DagWorkload { id, layers: layers_vec, edges, datasets, deadline, origin_device: Some(origin) }
}

/// Random pool plus one or two DAGs with `total_layers` layers between
/// them, each rooted at a random device. Deadlines are left unconstrained.
pub fn random_instance<R: Rng>(rng: &mut R, total_layers: usize, max_servers: usize) -> (Environment, Vec<DagWorkload>) {
    let env = random_environment(rng, max_servers);
    let devices: Vec<usize> = env.servers_of_tier(Tier::Device).collect();
    let split = if total_layers >= 2 && rng.gen_bool(0.4) { rng.gen_range(1..total_layers) } else { total_layers };
    let mut sizes = vec![split];
    if split < total_layers {
        sizes.push(total_layers - split);
    }
    let dags = sizes
        .into_iter()
        .enumerate()
        .map(|(id, k)| {
            let origin = *devices.choose(rng).unwrap();
            random_dag(rng, id, k, origin, DagWorkload::UNCONSTRAINED_DEADLINE)
        })
        .collect();
    (env, dags)
}
