//! PSO-GA: particle swarm search over server placements where the velocity
//! update is replaced by a mutation step and two guided crossovers.
//!
//! A particle carries one `(server, order)` pair per layer. Orders are
//! sampled once as a random topological priority and never change; the
//! operators only move servers.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{Assignment, EvalError, Evaluation, Instance, Schedule};
use crate::heft::{heft_schedule, HeftError};
use crate::model::{DagWorkload, Environment};

#[derive(Debug, Error)]
pub enum PsoError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Heft(#[from] HeftError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InertiaMode {
    Linear,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub population: usize,
    pub max_iters: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub c1_start: f64,
    pub c1_end: f64,
    pub c2_start: f64,
    pub c2_end: f64,
    pub stall_window: usize,
    pub inertia_mode: InertiaMode,
    pub seed: u64,
    /// Replace particle 0 with the per-DAG HEFT plans.
    pub seed_with_heft: bool,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            population: 100,
            max_iters: 1000,
            w_min: 0.4,
            w_max: 0.9,
            c1_start: 0.9,
            c1_end: 0.2,
            c2_start: 0.4,
            c2_end: 0.9,
            stall_window: 50,
            inertia_mode: InertiaMode::Adaptive,
            seed: 0,
            seed_with_heft: false,
        }
    }
}

impl PsoParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), PsoError> {
        let bad = |m: &str| Err(PsoError::InvalidParams(m.to_string()));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if !(unit(self.w_min) && unit(self.w_max) && self.w_min <= self.w_max) {
            return bad("need 0 <= w_min <= w_max <= 1");
        }
        if ![self.c1_start, self.c1_end, self.c2_start, self.c2_end].into_iter().all(unit) {
            return bad("acceleration coefficients must lie in [0, 1]");
        }
        if self.stall_window == 0 {
            return bad("stall_window must be positive");
        }
        Ok(())
    }
}

/// Fitness of a decoded particle: total cost when every deadline holds,
/// otherwise the sum of DAG completion times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessKey {
    pub feasible: bool,
    pub value: f64,
}

impl FitnessKey {
    pub fn feasible(cost: f64) -> Self {
        Self { feasible: true, value: cost }
    }

    pub fn infeasible(completion_sum: f64) -> Self {
        Self { feasible: false, value: completion_sum }
    }

    pub fn of(e: &Evaluation) -> Self {
        if e.feasible {
            Self::feasible(e.total_cost)
        } else {
            Self::infeasible(e.completion_sum)
        }
    }

    pub fn of_schedule(s: &Schedule) -> Self {
        if s.feasible {
            Self::feasible(s.cost.total)
        } else {
            Self::infeasible(s.completion_sum())
        }
    }

    pub fn is_better_than(&self, other: &FitnessKey) -> bool {
        compare(self, other) == Ordering::Less
    }
}

/// `Less` means `a` is the better key.
pub fn compare(a: &FitnessKey, b: &FitnessKey) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => a.value.total_cmp(&b.value),
    }
}

/// Per-layer constraints shared by the operators.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub server_count: usize,
    pub pinned: Vec<Option<usize>>,
    /// Servers used to draw initial placements, per layer.
    pub initial: Vec<Vec<usize>>,
    free: Vec<usize>,
}

impl SearchSpace {
    pub fn new(inst: &Instance, dags: &[DagWorkload], env: &Environment) -> Self {
        let per_dag: Vec<Vec<usize>> = dags.iter().map(|d| d.candidate_servers(env)).collect();
        let pinned: Vec<Option<usize>> = inst.layers().iter().map(|l| l.pinned).collect();
        let initial = inst
            .layers()
            .iter()
            .map(|l| match l.pinned {
                Some(s) => vec![s],
                None => per_dag[l.dag].clone(),
            })
            .collect();
        let free = (0..pinned.len()).filter(|&k| pinned[k].is_none()).collect();
        Self { server_count: env.len(), pinned, initial, free }
    }

    pub fn len(&self) -> usize {
        self.pinned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pinned.is_empty()
    }

    /// Dimensions the mutation may touch.
    pub fn free_dims(&self) -> &[usize] {
        &self.free
    }
}

pub fn mutate_at(x: &Assignment, dim: usize, server: usize) -> Assignment {
    let mut y = x.clone();
    y.servers[dim] = server;
    y
}

pub fn mutate<R: Rng>(x: &Assignment, space: &SearchSpace, rng: &mut R) -> Assignment {
    match space.free.choose(rng) {
        Some(&dim) => mutate_at(x, dim, rng.gen_range(0..space.server_count)),
        None => x.clone(),
    }
}

/// Copies `guide`'s servers on the inclusive range `[i1, i2]`.
pub fn crossover_segment(x: &Assignment, guide: &Assignment, i1: usize, i2: usize) -> Assignment {
    let mut y = x.clone();
    y.servers[i1..=i2].copy_from_slice(&guide.servers[i1..=i2]);
    y
}

pub fn crossover<R: Rng>(x: &Assignment, guide: &Assignment, rng: &mut R) -> Assignment {
    if x.is_empty() {
        return x.clone();
    }
    let a = rng.gen_range(0..x.len());
    let b = rng.gen_range(0..x.len());
    crossover_segment(x, guide, a.min(b), a.max(b))
}

pub fn inertia_linear(iters_cur: usize, params: &PsoParams) -> f64 {
    let t = iters_cur as f64 / params.max_iters.max(1) as f64;
    params.w_max - t * (params.w_max - params.w_min)
}

/// Weight for a normalised distance `d` from the global best.
pub fn inertia_of_distance(d: f64, params: &PsoParams) -> f64 {
    let d = d.clamp(0.0, 1.0);
    params.w_max - (params.w_max - params.w_min) * (d / (d - 1.01)).exp()
}

/// Number of server coordinates where `x` differs from `gbest`, divided by
/// the number of servers and clamped to `[0, 1]`.
pub fn diversity(x: &Assignment, gbest: &Assignment, server_count: usize) -> f64 {
    let diff = x.servers.iter().zip(&gbest.servers).filter(|(a, b)| a != b).count();
    (diff as f64 / server_count as f64).clamp(0.0, 1.0)
}

pub fn inertia_adaptive(x: &Assignment, gbest: &Assignment, env: &Environment, params: &PsoParams) -> f64 {
    inertia_of_distance(diversity(x, gbest, env.len()), params)
}

pub fn accel_coeffs(iters_cur: usize, params: &PsoParams) -> (f64, f64) {
    let t = iters_cur as f64 / params.max_iters.max(1) as f64;
    (
        params.c1_start + t * (params.c1_end - params.c1_start),
        params.c2_start + t * (params.c2_end - params.c2_start),
    )
}

/// One GA-style move: maybe mutate, then maybe cross with the personal
/// best, then maybe cross with the global best.
#[allow(clippy::too_many_arguments)]
pub fn update_particle<R: Rng>(
    x: &Assignment,
    pbest: &Assignment,
    gbest: &Assignment,
    w: f64,
    c1: f64,
    c2: f64,
    space: &SearchSpace,
    rng: &mut R,
) -> Assignment {
    let r1: f64 = rng.gen();
    let r2: f64 = rng.gen();
    let r3: f64 = rng.gen();
    let a = if r3 < w { mutate(x, space, rng) } else { x.clone() };
    let b = if r1 < c1 { crossover(&a, pbest, rng) } else { a };
    if r2 < c2 {
        crossover(&b, gbest, rng)
    } else {
        b
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Assignment,
    pub key: FitnessKey,
    pub best: Assignment,
    pub best_key: FitnessKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub feasible: bool,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best: Assignment,
    pub global_key: FitnessKey,
    pub iteration: usize,
    pub stall: usize,
    pub history: Vec<HistoryEntry>,
}

fn stream_rng(seed: u64, iteration: usize, particle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | particle as u64);
    rng
}

/// Random priority permutation that respects precedence: the next layer is
/// drawn uniformly from the ready set.
pub fn random_orders<R: Rng>(inst: &Instance, rng: &mut R) -> Vec<usize> {
    let layers = inst.layers();
    let mut pending: Vec<usize> = layers.iter().map(|l| l.parents.len()).collect();
    let mut ready: Vec<usize> = (0..layers.len()).filter(|&k| pending[k] == 0).collect();
    let mut orders = vec![0; layers.len()];
    let mut next = 0;
    while !ready.is_empty() {
        let k = ready.swap_remove(rng.gen_range(0..ready.len()));
        orders[k] = next;
        next += 1;
        for e in &layers[k].children {
            pending[e.layer] -= 1;
            if pending[e.layer] == 0 {
                ready.push(e.layer);
            }
        }
    }
    orders
}

fn random_particle<R: Rng>(inst: &Instance, space: &SearchSpace, rng: &mut R) -> Assignment {
    let servers = space.initial.iter().map(|c| *c.choose(rng).expect("candidate list is never empty")).collect();
    Assignment { servers, orders: random_orders(inst, rng) }
}

/// Per-DAG HEFT plans stitched into one assignment; priorities follow HEFT
/// start times across DAGs.
pub fn heft_assignment(inst: &Instance, dags: &[DagWorkload], env: &Environment) -> Result<Assignment, PsoError> {
    let mut servers = Vec::with_capacity(inst.len());
    let mut keys = Vec::with_capacity(inst.len());
    for (d, dag) in dags.iter().enumerate() {
        let plan = heft_schedule(dag, env)?;
        let local = plan.assignment();
        let base = inst.dag_range(d).start;
        servers.extend_from_slice(&local.servers);
        keys.extend(local.orders.iter().enumerate().map(|(i, &o)| (plan.start[i], d, o, base + i)));
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut orders = vec![0; inst.len()];
    for (rank, k) in keys.iter().enumerate() {
        orders[k.3] = rank;
    }
    Ok(Assignment { servers, orders })
}

fn evaluate(inst: &Instance, env: &Environment, x: &Assignment) -> FitnessKey {
    FitnessKey::of(&inst.evaluate(env, &x.servers, &x.orders))
}

pub fn init_swarm(
    inst: &Instance,
    dags: &[DagWorkload],
    env: &Environment,
    space: &SearchSpace,
    params: &PsoParams,
) -> Result<SwarmState, PsoError> {
    params.validate()?;
    let mut positions: Vec<Assignment> = (0..params.population)
        .map(|p| random_particle(inst, space, &mut stream_rng(params.seed, 0, p)))
        .collect();
    if params.seed_with_heft {
        positions[0] = heft_assignment(inst, dags, env)?;
    }
    let particles: Vec<Particle> = positions
        .into_iter()
        .map(|x| {
            let key = evaluate(inst, env, &x);
            Particle { best: x.clone(), best_key: key, position: x, key }
        })
        .collect();
    let mut g = 0;
    for (i, p) in particles.iter().enumerate().skip(1) {
        if p.best_key.is_better_than(&particles[g].best_key) {
            g = i;
        }
    }
    let global_key = particles[g].best_key;
    Ok(SwarmState {
        global_best: particles[g].best.clone(),
        global_key,
        particles,
        iteration: 0,
        stall: 0,
        history: vec![HistoryEntry { iteration: 0, feasible: global_key.feasible, value: global_key.value }],
    })
}

/// Moves every particle once, then folds personal and global bests in
/// particle order. Returns whether the global best improved.
pub fn step(state: &mut SwarmState, inst: &Instance, env: &Environment, space: &SearchSpace, params: &PsoParams) -> bool {
    let iters_cur = state.iteration;
    state.iteration += 1;
    let (c1, c2) = accel_coeffs(iters_cur, params);
    let gbest = state.global_best.clone();
    for (i, p) in state.particles.iter_mut().enumerate() {
        let w = match params.inertia_mode {
            InertiaMode::Linear => inertia_linear(iters_cur, params),
            InertiaMode::Adaptive => inertia_of_distance(diversity(&p.position, &gbest, space.server_count), params),
        };
        let mut rng = stream_rng(params.seed, state.iteration, i);
        p.position = update_particle(&p.position, &p.best, &gbest, w, c1, c2, space, &mut rng);
        p.key = evaluate(inst, env, &p.position);
    }
    let mut improved = false;
    for p in &mut state.particles {
        if p.key.is_better_than(&p.best_key) {
            p.best = p.position.clone();
            p.best_key = p.key;
        }
        if p.best_key.is_better_than(&state.global_key) {
            state.global_best = p.best.clone();
            state.global_key = p.best_key;
            improved = true;
        }
    }
    state.stall = if improved { 0 } else { state.stall + 1 };
    state.history.push(HistoryEntry {
        iteration: state.iteration,
        feasible: state.global_key.feasible,
        value: state.global_key.value,
    });
    improved
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    pub assignment: Assignment,
    pub schedule: Schedule,
    pub key: FitnessKey,
    pub history: Vec<HistoryEntry>,
    pub evaluations: usize,
}

impl PsoOutcome {
    pub fn feasible(&self) -> bool {
        self.key.feasible
    }

    /// `iteration,feasible,best_value` rows.
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("iteration,feasible,best_value\n");
    for h in history {
        let _ = writeln!(out, "{},{},{}", h.iteration, h.feasible, h.value);
    }
    out
}

/// Runs the swarm until `max_iters` updates or until the global best key
/// has not changed for `stall_window` consecutive iterations.
pub fn run(dags: &[DagWorkload], env: &Environment, params: &PsoParams) -> Result<PsoOutcome, PsoError> {
    for d in dags {
        d.validate_against(env).map_err(EvalError::from)?;
    }
    let inst = Instance::new(dags)?;
    let space = SearchSpace::new(&inst, dags, env);
    let mut state = init_swarm(&inst, dags, env, &space, params)?;
    while state.iteration < params.max_iters && state.stall < params.stall_window {
        step(&mut state, &inst, env, &space, params);
    }
    let schedule = inst.simulate(&state.global_best, env)?;
    Ok(PsoOutcome {
        key: state.global_key,
        evaluations: params.population * (state.iteration + 1),
        assignment: state.global_best,
        schedule,
        history: state.history,
    })
}
