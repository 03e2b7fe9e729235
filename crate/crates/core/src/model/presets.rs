//! Built-in server pools and synthetic workload generators.
//!
//! Server configurations and tier-pair link prices follow the published
//! 20-server setup. Workload numeric profiles are synthetic: each
//! architecture has a fixed topology and a base profile that is jittered by
//! +/-20% from a seed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DagWorkload, Dataset, Environment, Layer, LinkSpec, ModelError, ServerSpec, Tier};

/// Bandwidth (MB/s) and price ($/GB) between two tiers.
pub fn tier_link(a: Tier, b: Tier) -> (f64, f64) {
    use Tier::*;
    match (a.min(b), a.max(b)) {
        (Cloud, Cloud) => (5.0, 0.4),
        (Cloud, Edge) | (Cloud, Device) => (2.0, 0.8),
        (Edge, Edge) | (Edge, Device) => (10.0, 0.16),
        (Device, Device) => (0.0, 0.0),
        _ => unreachable!("min/max ordering"),
    }
}

/// Builds a pool from `(power, dollars per hour, tier)` triples using the
/// tier-pair link table. Each device reaches exactly two edge servers
/// (ring-adjacent by index) and no other edge server.
pub fn tiered_environment(specs: &[(f64, f64, Tier)]) -> Result<Environment, ModelError> {
    let servers: Vec<ServerSpec> = specs
        .iter()
        .enumerate()
        .map(|(id, &(power, per_hour, tier))| ServerSpec { id, power, cost_rate: per_hour / 3600.0, tier })
        .collect();
    let devices: Vec<usize> = servers.iter().filter(|s| s.tier == Tier::Device).map(|s| s.id).collect();
    let edges: Vec<usize> = servers.iter().filter(|s| s.tier == Tier::Edge).map(|s| s.id).collect();
    let near_edges = |device: usize| -> Vec<usize> {
        if edges.is_empty() {
            return Vec::new();
        }
        let k = devices.iter().position(|&d| d == device).unwrap_or(0);
        let first = k * edges.len() / devices.len().max(1);
        vec![edges[first], edges[(first + 1) % edges.len()]]
    };
    let n = servers.len();
    let mut links = vec![vec![LinkSpec::default(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ti, tj) = (servers[i].tier, servers[j].tier);
            let connected = match (ti, tj) {
                (Tier::Device, Tier::Edge) => near_edges(i).contains(&j),
                (Tier::Edge, Tier::Device) => near_edges(j).contains(&i),
                _ => true,
            };
            if connected {
                let (bw, per_gb) = tier_link(ti, tj);
                links[i][j] = LinkSpec { bandwidth: bw, transfer_cost: per_gb / 1000.0 };
            }
        }
    }
    Environment::new(servers, links)
}

/// The full 20-server pool: ten devices, five edge servers, five cloud
/// instance sizes. Power is the CPU count.
pub fn standard_environment() -> Environment {
    let mut specs = vec![(2.0, 0.0, Tier::Device); 10];
    specs.extend([(16.0, 2.43, Tier::Edge); 5]);
    specs.extend([
        (4.0, 0.225, Tier::Cloud),
        (8.0, 0.45, Tier::Cloud),
        (16.0, 0.9, Tier::Cloud),
        (32.0, 1.8, Tier::Cloud),
        (64.0, 3.6, Tier::Cloud),
    ]);
    tiered_environment(&specs).expect("preset is valid")
}

/// A reduced pool for quick experiments: four devices, two edge servers
/// and the 16- and 64-CPU cloud instances.
pub fn desk_environment() -> Environment {
    let mut specs = vec![(2.0, 0.0, Tier::Device); 4];
    specs.extend([(16.0, 2.43, Tier::Edge); 2]);
    specs.extend([(16.0, 0.9, Tier::Cloud), (64.0, 3.6, Tier::Cloud)]);
    tiered_environment(&specs).expect("preset is valid")
}

/// Two servers: a free unit-power device and a $1/s edge server of power 2,
/// joined by a 1 MB/s link at $0.001/MB.
pub fn tiny_environment() -> Environment {
    let servers = vec![
        ServerSpec { id: 0, power: 1.0, cost_rate: 0.0, tier: Tier::Device },
        ServerSpec { id: 1, power: 2.0, cost_rate: 1.0, tier: Tier::Edge },
    ];
    let link = LinkSpec { bandwidth: 1.0, transfer_cost: 0.001 };
    let none = LinkSpec::default();
    Environment::new(servers, vec![vec![none, link], vec![link, none]]).expect("preset is valid")
}

/// `l0 (a=1, pinned to s0) --2 MB--> l1 (a=2)`.
pub fn tiny_dag(deadline: f64) -> DagWorkload {
    DagWorkload {
        id: 0,
        layers: vec![
            Layer { id: 0, dag_id: 0, compute_amount: 1.0, inputs: vec![], outputs: vec![1], pinned_server: Some(0) },
            Layer { id: 1, dag_id: 0, compute_amount: 2.0, inputs: vec![1], outputs: vec![], pinned_server: None },
        ],
        edges: vec![(0, 1)],
        datasets: vec![Dataset { id: 1, size: 2.0, producer: Some(0), consumers: vec![1] }],
        deadline,
        origin_device: Some(0),
    }
}

/// Six servers: one device, two edge servers, three cloud servers, priced
/// at 0, 10, 15, 1, 2 and 3 dollars per hour.
pub fn quad_environment() -> Environment {
    tiered_environment(&[
        (1.0, 0.0, Tier::Device),
        (2.0, 10.0, Tier::Edge),
        (2.0, 15.0, Tier::Edge),
        (3.0, 1.0, Tier::Cloud),
        (2.0, 2.0, Tier::Cloud),
        (4.0, 3.0, Tier::Cloud),
    ])
    .expect("preset is valid")
}

/// Four layers and four datasets of 1, 1, 0.5 and 0.5 MB, deadline 3.7 s:
/// `l0->l1`, `l0->l2`, `l1->l2`, `l1->l3`, with `l0` pinned to the device.
pub fn quad_dag() -> DagWorkload {
    let layer = |id: usize, a: f64, inputs: Vec<usize>, outputs: Vec<usize>| Layer {
        id,
        dag_id: 0,
        compute_amount: a,
        inputs,
        outputs,
        pinned_server: (id == 0).then_some(0),
    };
    let ds = |id: usize, size: f64, p: usize, c: usize| Dataset { id, size, producer: Some(p), consumers: vec![c] };
    DagWorkload {
        id: 0,
        layers: vec![
            layer(0, 1.1, vec![], vec![1, 2]),
            layer(1, 2.0, vec![1], vec![3, 4]),
            layer(2, 1.5, vec![2, 3], vec![]),
            layer(3, 2.5, vec![4], vec![]),
        ],
        edges: vec![(0, 1), (0, 2), (1, 2), (1, 3)],
        datasets: vec![ds(1, 1.0, 0, 1), ds(2, 1.0, 0, 2), ds(3, 0.5, 1, 2), ds(4, 0.5, 1, 3)],
        deadline: 3.7,
        origin_device: Some(0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arch {
    #[serde(rename = "alexnet-like")]
    AlexNetLike,
    #[serde(rename = "vgg-like")]
    VggLike,
    #[serde(rename = "googlenet-like")]
    GoogLeNetLike,
    #[serde(rename = "resnet-like")]
    ResNetLike,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::AlexNetLike, Arch::VggLike, Arch::GoogLeNetLike, Arch::ResNetLike];

    pub fn name(self) -> &'static str {
        match self {
            Arch::AlexNetLike => "alexnet-like",
            Arch::VggLike => "vgg-like",
            Arch::GoogLeNetLike => "googlenet-like",
            Arch::ResNetLike => "resnet-like",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown architecture {s:?}"))
    }
}

/// Layer graph under construction: per layer a compute amount and the
/// size of the single tensor it emits to all of its children.
struct Sketch {
    compute: Vec<f64>,
    out_size: Vec<f64>,
    edges: Vec<(usize, usize)>,
    input_size: f64,
}

impl Sketch {
    fn new(input_size: f64) -> Self {
        Self { compute: Vec::new(), out_size: Vec::new(), edges: Vec::new(), input_size }
    }

    fn add(&mut self, compute: f64, out_size: f64, parents: &[usize]) -> usize {
        let id = self.compute.len();
        self.compute.push(compute);
        self.out_size.push(out_size);
        self.edges.extend(parents.iter().map(|&p| (p, id)));
        id
    }

    fn chain(&mut self, profile: &[(f64, f64)]) {
        let mut prev: Option<usize> = None;
        for &(a, s) in profile {
            let parents: Vec<usize> = prev.into_iter().collect();
            prev = Some(self.add(a, s, &parents));
        }
    }

    /// Layer 0 consumes the initial input and is pinned to `origin`. Every
    /// layer emits one dataset read by all of its children; sinks emit a
    /// dataset nobody consumes.
    fn build(self, origin: usize, rng: &mut ChaCha8Rng) -> DagWorkload {
        let n = self.compute.len();
        let mut jitter = || rng.gen_range(0.8..1.2);
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            children[u].push(v);
            parents[v].push(u);
        }
        let source = n;
        let mut datasets = vec![Dataset {
            id: source,
            size: round6(self.input_size * jitter()),
            producer: None,
            consumers: vec![0],
        }];
        let mut layers = Vec::with_capacity(n);
        for i in 0..n {
            let mut inputs: Vec<usize> = parents[i].clone();
            if i == 0 {
                inputs.insert(0, source);
            }
            layers.push(Layer {
                id: i,
                dag_id: 0,
                compute_amount: round6(self.compute[i] * jitter()),
                inputs,
                outputs: vec![i],
                pinned_server: (i == 0).then_some(origin),
            });
            datasets.push(Dataset {
                id: i,
                size: round6(self.out_size[i] * jitter()),
                producer: Some(i),
                consumers: children[i].clone(),
            });
        }
        datasets.sort_by_key(|d| d.id);
        DagWorkload {
            id: 0,
            layers,
            edges: self.edges,
            datasets,
            deadline: DagWorkload::UNCONSTRAINED_DEADLINE,
            origin_device: Some(origin),
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Deterministic synthetic workload for `arch`, rooted at `origin_device`.
///
/// * alexnet-like: 11-layer chain
/// * vgg-like: 24-layer chain
/// * resnet-like: 103-layer chain
/// * googlenet-like: stem chain, nine four-branch blocks, two auxiliary
///   heads and a classifier tail (96 layers)
pub fn generate_workload(arch: Arch, origin_device: usize, seed: u64) -> DagWorkload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sketch = match arch {
        Arch::AlexNetLike => alexnet_sketch(),
        Arch::VggLike => vgg_sketch(),
        Arch::ResNetLike => resnet_sketch(),
        Arch::GoogLeNetLike => googlenet_sketch(),
    };
    sketch.build(origin_device, &mut rng)
}

/// Like [`generate_workload`] but checks that the origin is a device of `env`.
pub fn generate_workload_in(
    env: &Environment,
    arch: Arch,
    origin_device: usize,
    seed: u64,
) -> Result<DagWorkload, ModelError> {
    if origin_device >= env.len() || env.server(origin_device).tier != Tier::Device {
        return Err(ModelError::NotADevice { server: origin_device });
    }
    Ok(generate_workload(arch, origin_device, seed))
}

impl DagWorkload {
    /// Relabels the DAG (and its layers) with a new id.
    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        for l in &mut self.layers {
            l.dag_id = id;
        }
        self
    }
}

fn alexnet_sketch() -> Sketch {
    // conv1 pool1 conv2 pool2 conv3 conv4 conv5 pool5 fc6 fc7 fc8
    let profile = [
        (0.90, 1.05),
        (0.06, 0.27),
        (1.86, 0.75),
        (0.06, 0.17),
        (1.26, 0.26),
        (0.93, 0.26),
        (0.60, 0.17),
        (0.03, 0.037),
        (0.32, 0.016),
        (0.14, 0.016),
        (0.04, 0.004),
    ];
    let mut s = Sketch::new(0.6);
    s.chain(&profile);
    s
}

fn vgg_sketch() -> Sketch {
    let mut profile = Vec::new();
    // (convs in stage, compute per conv, feature map MB)
    for &(convs, a, mb) in &[(2, 3.6, 12.8), (2, 5.5, 6.4), (4, 5.5, 3.2), (4, 5.5, 1.6), (4, 1.4, 0.4)] {
        for _ in 0..convs {
            profile.push((a, mb));
        }
        profile.push((0.05, mb / 4.0));
    }
    profile.extend([(0.4, 0.016), (0.07, 0.016), (0.02, 0.004)]);
    let mut s = Sketch::new(0.6);
    s.chain(&profile);
    s
}

fn resnet_sketch() -> Sketch {
    let mut profile = vec![(0.47, 3.2), (0.02, 0.8)];
    for &(blocks, a, mb) in &[(3, 0.22, 3.2), (4, 0.26, 1.6), (23, 0.26, 0.8), (3, 0.26, 0.4)] {
        for _ in 0..blocks {
            profile.extend([(a * 0.6, mb / 4.0), (a, mb / 4.0), (a * 0.9, mb)]);
        }
    }
    profile.extend([(0.01, 0.008), (0.008, 0.004)]);
    let mut s = Sketch::new(0.6);
    s.chain(&profile);
    s
}

fn googlenet_sketch() -> Sketch {
    let mut s = Sketch::new(0.6);
    // stem: conv1 pool1 lrn1 conv2-reduce conv2 lrn2 pool2, preceded by the input layer
    let stem = [(0.02, 0.6), (0.47, 3.2), (0.01, 0.8), (0.01, 0.8), (0.06, 0.8), (1.4, 2.4), (0.01, 2.4), (0.01, 0.6)];
    s.chain(&stem);
    let mut prev = stem.len() - 1;
    let block = |s: &mut Sketch, input: usize, scale: f64| -> usize {
        let b1 = s.add(0.1 * scale, 0.2 * scale, &[input]);
        let b2r = s.add(0.08 * scale, 0.1 * scale, &[input]);
        let b2 = s.add(0.35 * scale, 0.25 * scale, &[b2r]);
        let b3r = s.add(0.02 * scale, 0.03 * scale, &[input]);
        let b3 = s.add(0.08 * scale, 0.06 * scale, &[b3r]);
        let b4p = s.add(0.01 * scale, 0.5 * scale, &[input]);
        let b4 = s.add(0.05 * scale, 0.06 * scale, &[b4p]);
        s.add(0.005 * scale, 0.6 * scale, &[b1, b2, b3, b4])
    };
    let aux = |s: &mut Sketch, input: usize| {
        let a = s.add(0.01, 0.05, &[input]);
        let b = s.add(0.02, 0.03, &[a]);
        let c = s.add(0.03, 0.004, &[b]);
        let d = s.add(0.004, 0.004, &[c]);
        s.add(0.001, 0.004, &[d]);
    };
    // 3a 3b | pool | 4a (aux) 4b 4c 4d (aux) 4e | pool | 5a 5b
    for (i, scale) in [1.0, 1.4, 1.2, 1.3, 1.3, 1.4, 1.6, 1.0, 1.2].into_iter().enumerate() {
        prev = block(&mut s, prev, scale);
        match i {
            1 | 6 => prev = s.add(0.01, 0.3, &[prev]),
            2 | 5 => aux(&mut s, prev),
            _ => {}
        }
    }
    // avgpool dropout fc softmax
    let mut tail = prev;
    for (a, mb) in [(0.01, 0.004), (0.001, 0.004), (0.01, 0.004), (0.001, 0.004)] {
        tail = s.add(a, mb, &[tail]);
    }
    s
}
