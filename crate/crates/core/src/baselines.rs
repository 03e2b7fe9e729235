//! Comparison strategies: a deadline-aware cheapest-first greedy, a
//! binary-encoded genetic algorithm, and PSO-GA run on merged DAGs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evaluator::{Assignment, EvalError, Instance, Schedule};
use crate::model::{DagWorkload, Environment};
use crate::preprocess::{expand_assignment, merge_all, MergeReport};
use crate::psoga::{self, FitnessKey, HistoryEntry, PsoError, PsoParams};

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub assignment: Assignment,
    pub schedule: Schedule,
    /// Some layer found no server passing the look-ahead check.
    pub at_risk: bool,
}

/// Visit order: each DAG in its own lowest-first topological order, the
/// DAGs interleaved round-robin.
fn round_robin_order(inst: &Instance) -> Vec<usize> {
    let topo = inst.topological_order();
    let mut per_dag: Vec<std::collections::VecDeque<usize>> = vec![Default::default(); inst.dag_count()];
    for k in topo {
        per_dag[inst.layers()[k].dag].push_back(k);
    }
    let mut out = Vec::with_capacity(inst.len());
    while out.len() < inst.len() {
        for q in &mut per_dag {
            if let Some(k) = q.pop_front() {
                out.push(k);
            }
        }
    }
    out
}

/// End time of `visit[last]` when the committed prefix `visit[..=last]` is
/// replayed with the evaluator's lease rules. Outbound transfers count only
/// toward committed children. `None` if a needed route is missing.
fn partial_end(inst: &Instance, env: &Environment, visit: &[usize], servers: &[Option<usize>]) -> Option<f64> {
    let layers = inst.layers();
    let mut end = vec![0.0; inst.len()];
    let mut lease = vec![0.0; env.len()];
    let mut last = 0.0;
    for &k in visit {
        let s = servers[k].expect("prefix is committed");
        let mut start = lease[s];
        for e in &layers[k].parents {
            let ps = servers[e.layer].expect("parents precede children");
            let delay = if ps == s {
                0.0
            } else if env.is_routable(ps, s) {
                e.payload / env.link(ps, s).bandwidth
            } else {
                return None;
            };
            start = f64::max(start, end[e.layer] + delay);
        }
        let finish = start + layers[k].compute / env.server(s).power;
        let outbound: f64 = layers[k]
            .children
            .iter()
            .filter_map(|e| servers[e.layer].filter(|&cs| cs != s && env.is_routable(s, cs)).map(|cs| e.payload / env.link(s, cs).bandwidth))
            .sum();
        end[k] = finish;
        lease[s] = finish + outbound;
        last = finish;
    }
    Some(last)
}

/// Longest chain of successor work below each layer, run on the fastest
/// server with free transfers.
fn remaining_work_bound(inst: &Instance, env: &Environment) -> Vec<f64> {
    let pmax = env.max_power();
    let mut tail = vec![0.0; inst.len()];
    for &k in inst.topological_order().iter().rev() {
        tail[k] = inst.layers()[k]
            .children
            .iter()
            .map(|e| inst.layers()[e.layer].compute / pmax + tail[e.layer])
            .fold(0.0, f64::max);
    }
    tail
}

/// Places each layer on the cheapest server that keeps its DAG's deadline
/// reachable, falling back to the earliest finish when none does.
pub fn greedy_offload(dags: &[DagWorkload], env: &Environment) -> Result<GreedyOutcome, EvalError> {
    for d in dags {
        d.validate_against(env)?;
    }
    let inst = Instance::new(dags)?;
    let visit = round_robin_order(&inst);
    let tail = remaining_work_bound(&inst, env);
    let mut by_price: Vec<usize> = (0..env.len()).collect();
    by_price.sort_by(|&a, &b| env.server(a).cost_rate.total_cmp(&env.server(b).cost_rate).then(a.cmp(&b)));

    let mut servers: Vec<Option<usize>> = vec![None; inst.len()];
    let mut at_risk = false;
    for (i, &k) in visit.iter().enumerate() {
        let layer = &inst.layers()[k];
        let deadline = inst.deadlines()[layer.dag];
        let candidates = match layer.pinned {
            Some(s) => vec![s],
            None => by_price.clone(),
        };
        let mut chosen = None;
        let mut fastest: Option<(f64, usize)> = None;
        for s in candidates {
            servers[k] = Some(s);
            let Some(end) = partial_end(&inst, env, &visit[..=i], &servers) else { continue };
            if end + tail[k] <= deadline {
                chosen = Some(s);
                break;
            }
            if fastest.map_or(true, |(e, _)| end < e) {
                fastest = Some((end, s));
            }
        }
        let s = match (chosen, fastest) {
            (Some(s), _) => s,
            (None, Some((_, s))) => {
                at_risk = true;
                s
            }
            (None, None) => {
                at_risk = true;
                layer.pinned.unwrap_or(by_price[0])
            }
        };
        servers[k] = Some(s);
    }

    let mut orders = vec![0; inst.len()];
    for (pos, &k) in visit.iter().enumerate() {
        orders[k] = pos;
    }
    let assignment = Assignment { servers: servers.into_iter().map(Option::unwrap).collect(), orders };
    let schedule = inst.simulate(&assignment, env)?;
    Ok(GreedyOutcome { assignment, schedule, at_risk })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means one over the chromosome length.
    pub mutation_rate: Option<f64>,
    pub tournament: usize,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self { crossover_rate: 0.8, mutation_rate: None, tournament: 2, elitism: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub assignment: Assignment,
    pub schedule: Schedule,
    pub key: FitnessKey,
    pub history: Vec<HistoryEntry>,
}

pub fn bits_per_layer(server_count: usize) -> usize {
    (usize::BITS - server_count.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// Reads `bits` bits per layer (most significant first), reduces modulo
/// the server count and then applies pins.
pub fn decode_chromosome(genes: &[bool], bits: usize, server_count: usize, pinned: &[Option<usize>]) -> Vec<usize> {
    genes
        .chunks(bits)
        .zip(pinned)
        .map(|(chunk, pin)| pin.unwrap_or_else(|| chunk.iter().fold(0usize, |v, &b| (v << 1) | b as usize) % server_count))
        .collect()
}

pub fn ga_run(dags: &[DagWorkload], env: &Environment, pso: &PsoParams, ga: &GaParams) -> Result<GaOutcome, PsoError> {
    pso.validate()?;
    for d in dags {
        d.validate_against(env).map_err(EvalError::from)?;
    }
    let inst = Instance::new(dags)?;
    let n = inst.len();
    let m = env.len();
    let bits = bits_per_layer(m);
    let len = n * bits;
    let pinned: Vec<Option<usize>> = inst.layers().iter().map(|l| l.pinned).collect();
    let mut orders = vec![0; n];
    for (pos, k) in inst.topological_order().into_iter().enumerate() {
        orders[k] = pos;
    }
    let p_mut = ga.mutation_rate.unwrap_or(if len > 0 { 1.0 / len as f64 } else { 0.0 });
    let fitness = |g: &[bool]| {
        let servers = decode_chromosome(g, bits, m, &pinned);
        FitnessKey::of(&inst.evaluate(env, &servers, &orders))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(pso.seed);
    let mut pop: Vec<Vec<bool>> = (0..pso.population).map(|_| (0..len).map(|_| rng.gen()).collect()).collect();
    let mut keys: Vec<FitnessKey> = pop.iter().map(|g| fitness(g)).collect();
    let mut best = 0;
    for i in 1..pop.len() {
        if keys[i].is_better_than(&keys[best]) {
            best = i;
        }
    }
    let mut best_genes = pop[best].clone();
    let mut best_key = keys[best];
    let entry = |iteration, k: FitnessKey| HistoryEntry { iteration, feasible: k.feasible, value: k.value };
    let mut history = vec![entry(0, best_key)];
    let mut stall = 0;
    let mut generation = 0;

    while generation < pso.max_iters && stall < pso.stall_window {
        generation += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(pso.seed);
        rng.set_stream(generation as u64);

        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| psoga::compare(&keys[a], &keys[b]).then(a.cmp(&b)));
        let mut next: Vec<Vec<bool>> = ranked.iter().take(ga.elitism).map(|&i| pop[i].clone()).collect();

        let tournament = |rng: &mut ChaCha8Rng| {
            let mut pick = rng.gen_range(0..pop.len());
            for _ in 1..ga.tournament.max(1) {
                let c = rng.gen_range(0..pop.len());
                if keys[c].is_better_than(&keys[pick]) {
                    pick = c;
                }
            }
            pick
        };
        while next.len() < pop.len() {
            let mut a = pop[tournament(&mut rng)].clone();
            let mut b = pop[tournament(&mut rng)].clone();
            if len > 1 && rng.gen::<f64>() < ga.crossover_rate {
                let x = rng.gen_range(0..=len);
                let y = rng.gen_range(0..=len);
                let (lo, hi) = (x.min(y), x.max(y));
                a[lo..hi].swap_with_slice(&mut b[lo..hi]);
            }
            for child in [&mut a, &mut b] {
                for bit in child.iter_mut() {
                    if rng.gen::<f64>() < p_mut {
                        *bit = !*bit;
                    }
                }
            }
            next.push(a);
            if next.len() < pop.len() {
                next.push(b);
            }
        }
        pop = next;
        keys = pop.iter().map(|g| fitness(g)).collect();

        let mut improved = false;
        for (g, k) in pop.iter().zip(&keys) {
            if k.is_better_than(&best_key) {
                best_key = *k;
                best_genes = g.clone();
                improved = true;
            }
        }
        stall = if improved { 0 } else { stall + 1 };
        history.push(entry(generation, best_key));
    }

    let assignment = Assignment { servers: decode_chromosome(&best_genes, bits, m, &pinned), orders };
    let schedule = inst.simulate(&assignment, env)?;
    Ok(GaOutcome { assignment, schedule, key: best_key, history })
}

#[derive(Debug, Clone)]
pub struct PrePsoOutcome {
    pub merged: Vec<DagWorkload>,
    pub reports: Vec<MergeReport>,
    pub merged_assignment: Assignment,
    pub merged_schedule: Schedule,
    /// The merged plan mapped back onto the original layers.
    pub assignment: Assignment,
    pub schedule: Schedule,
    pub history: Vec<HistoryEntry>,
}

impl PrePsoOutcome {
    pub fn key(&self) -> FitnessKey {
        FitnessKey::of_schedule(&self.schedule)
    }
}

/// PSO-GA on cut-edge-merged DAGs, expanded back to the original layers.
pub fn pre_pso_run(dags: &[DagWorkload], env: &Environment, params: &PsoParams) -> Result<PrePsoOutcome, PsoError> {
    let (merged, reports) = merge_all(dags);
    let out = psoga::run(&merged, env, params)?;
    let assignment = expand_assignment(&out.assignment, &merged, &reports, dags);
    let schedule = Instance::new(dags)?.simulate(&assignment, env)?;
    Ok(PrePsoOutcome {
        merged,
        reports,
        merged_assignment: out.assignment,
        merged_schedule: out.schedule,
        assignment,
        schedule,
        history: out.history,
    })
}
