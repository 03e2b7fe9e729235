//! HEFT list scheduling, used to calibrate per-DAG deadlines.
//!
//! Each DAG is scheduled alone on an empty machine. The reported makespan
//! `H` is the larger of HEFT's own insertion-based makespan and the
//! completion of the same plan replayed by the evaluator, so a deadline of
//! `r * H` with `r >= 1` always admits at least the HEFT plan.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{Assignment, EvalError, Instance};
use crate::model::{DagWorkload, Environment};

#[derive(Debug, Error)]
pub enum HeftError {
    #[error("dag {dag}: layer {layer} has no server reachable from all of its parents")]
    Unroutable { dag: usize, layer: usize },
    #[error("deadline ratios must be >= 1 and strictly increasing, got {0:?}")]
    BadRatios(Vec<f64>),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadlinePolicy {
    pub ratios: Vec<f64>,
}

impl DeadlinePolicy {
    pub const DEFAULT_RATIOS: [f64; 5] = [1.2, 1.5, 3.0, 5.0, 8.0];

    pub fn new(ratios: Vec<f64>) -> Result<Self, HeftError> {
        let ok = ratios.iter().all(|r| r.is_finite() && *r >= 1.0) && ratios.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(Self { ratios })
        } else {
            Err(HeftError::BadRatios(ratios))
        }
    }

    pub fn standard() -> Self {
        Self { ratios: Self::DEFAULT_RATIOS.to_vec() }
    }
}

impl Default for DeadlinePolicy {
    fn default() -> Self {
        Self::standard()
    }
}

pub fn derive_deadlines(h: f64, policy: &DeadlinePolicy) -> Vec<f64> {
    policy.ratios.iter().map(|r| r * h).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HeftPlan {
    /// Upward rank per layer position.
    pub ranks: Vec<f64>,
    /// Layer positions in the order HEFT placed them.
    pub sequence: Vec<usize>,
    pub servers: Vec<usize>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// Makespan under HEFT's own gap-filling timeline.
    pub internal_makespan: f64,
    /// Completion of the plan replayed by the evaluator.
    pub simulated_makespan: f64,
    pub makespan: f64,
}

impl HeftPlan {
    /// The plan as an evaluator assignment; priorities follow HEFT start
    /// times, ties by placement sequence.
    pub fn assignment(&self) -> Assignment {
        let mut seq_pos = vec![0; self.sequence.len()];
        for (i, &k) in self.sequence.iter().enumerate() {
            seq_pos[k] = i;
        }
        let mut by_start: Vec<usize> = (0..self.servers.len()).collect();
        by_start.sort_by(|&a, &b| self.start[a].total_cmp(&self.start[b]).then(seq_pos[a].cmp(&seq_pos[b])));
        let mut orders = vec![0; by_start.len()];
        for (o, &k) in by_start.iter().enumerate() {
            orders[k] = o;
        }
        Assignment { servers: self.servers.clone(), orders }
    }
}

fn permitted(pin: Option<usize>, env: &Environment) -> Vec<usize> {
    match pin {
        Some(s) => vec![s],
        None => (0..env.len()).collect(),
    }
}

fn mean_exec(compute: f64, servers: &[usize], env: &Environment) -> f64 {
    servers.iter().map(|&s| compute / env.server(s).power).sum::<f64>() / servers.len() as f64
}

fn mean_transfer(payload: f64, from: &[usize], to: &[usize], env: &Environment) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &i in from {
        for &j in to {
            if i != j && env.is_routable(i, j) {
                sum += payload / env.link(i, j).bandwidth;
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Upward ranks per layer position of the single DAG held by `inst`.
fn upward_ranks(inst: &Instance, env: &Environment) -> Vec<f64> {
    let layers = inst.layers();
    let allowed: Vec<Vec<usize>> = layers.iter().map(|l| permitted(l.pinned, env)).collect();
    let mut rank = vec![0.0; layers.len()];
    for &k in inst.topological_order().iter().rev() {
        let l = &layers[k];
        let tail = l
            .children
            .iter()
            .map(|e| mean_transfer(e.payload, &allowed[k], &allowed[e.layer], env) + rank[e.layer])
            .fold(0.0, f64::max);
        rank[k] = mean_exec(l.compute, &allowed[k], env) + tail;
    }
    rank
}

/// Earliest start `>= ready` that fits `len` seconds between the busy
/// intervals (kept sorted by start).
fn insertion_start(busy: &[(f64, f64)], ready: f64, len: f64) -> f64 {
    let mut t = ready;
    for &(s, e) in busy {
        if t + len <= s {
            return t;
        }
        t = t.max(e);
    }
    t
}

pub fn heft_schedule(dag: &DagWorkload, env: &Environment) -> Result<HeftPlan, HeftError> {
    let inst = Instance::new(std::slice::from_ref(dag))?;
    let layers = inst.layers();
    let n = layers.len();
    let ranks = upward_ranks(&inst, env);

    let mut pending: Vec<usize> = layers.iter().map(|l| l.parents.len()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&k| pending[k] == 0).collect();
    let mut busy: Vec<Vec<(f64, f64)>> = vec![Vec::new(); env.len()];
    let mut servers = vec![0; n];
    let mut start = vec![0.0; n];
    let mut end = vec![0.0; n];
    let mut sequence = Vec::with_capacity(n);

    while !ready.is_empty() {
        let (pos, &k) = ready
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| ranks[a].total_cmp(&ranks[b]).then(b.cmp(&a)))
            .unwrap();
        ready.swap_remove(pos);
        let l = &layers[k];

        let mut best: Option<(f64, f64, usize)> = None;
        'candidates: for s in permitted(l.pinned, env) {
            let mut avail = 0.0f64;
            for e in &l.parents {
                let from = servers[e.layer];
                let delay = if from == s {
                    0.0
                } else if env.is_routable(from, s) {
                    e.payload / env.link(from, s).bandwidth
                } else {
                    continue 'candidates;
                };
                avail = avail.max(end[e.layer] + delay);
            }
            let exec = l.compute / env.server(s).power;
            let st = insertion_start(&busy[s], avail, exec);
            if best.map_or(true, |(_, eft, _)| (st + exec).total_cmp(&eft) == Ordering::Less) {
                best = Some((st, st + exec, s));
            }
        }
        let Some((st, ft, s)) = best else {
            return Err(HeftError::Unroutable { dag: dag.id, layer: l.id });
        };
        servers[k] = s;
        start[k] = st;
        end[k] = ft;
        let at = busy[s].partition_point(|&(b, _)| b <= st);
        busy[s].insert(at, (st, ft));
        sequence.push(k);

        for e in &l.children {
            pending[e.layer] -= 1;
            if pending[e.layer] == 0 {
                ready.push(e.layer);
            }
        }
    }

    let internal_makespan = end.iter().copied().fold(0.0, f64::max);
    let mut plan = HeftPlan {
        ranks,
        sequence,
        servers,
        start,
        end,
        internal_makespan,
        simulated_makespan: 0.0,
        makespan: 0.0,
    };
    let schedule = inst.simulate(&plan.assignment(), env)?;
    plan.simulated_makespan = schedule.makespan();
    plan.makespan = plan.internal_makespan.max(plan.simulated_makespan);
    Ok(plan)
}

/// `H(G)` for one DAG.
pub fn heft_makespan(dag: &DagWorkload, env: &Environment) -> Result<f64, HeftError> {
    Ok(heft_schedule(dag, env)?.makespan)
}

/// Copies of `dags` whose deadlines are `ratio * H(G)`.
pub fn with_deadline_ratio(dags: &[DagWorkload], env: &Environment, ratio: f64) -> Result<Vec<DagWorkload>, HeftError> {
    dags.iter()
        .map(|d| {
            let h = heft_makespan(d, env)?;
            let mut d = d.clone();
            d.deadline = ratio * h;
            Ok(d)
        })
        .collect()
}
