//! Deadline sweeps with repeated seeded trials.

use std::time::Instant;

use offload_core::baselines::{ga_run, greedy_offload, pre_pso_run};
use offload_core::heft::heft_makespan;
use offload_core::psoga;
use offload_core::{DagWorkload, Environment, Schedule};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::BenchError;

pub const THREADS_VAR: &str = "OFFLOAD_OPT_THREADS";

#[derive(Debug, Clone, Serialize)]
pub struct Trial {
    pub algorithm: Algorithm,
    pub ratio: f64,
    pub index: usize,
    pub seed: u64,
    pub feasible: bool,
    pub cost: f64,
    pub makespan: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub ratio: f64,
    /// Mean cost over feasible trials; `None` when no trial was feasible.
    pub mean_cost: Option<f64>,
    /// Mean cost over every trial, feasible or not.
    pub mean_cost_all: f64,
    pub feasible_rate: f64,
    pub mean_makespan: f64,
    pub mean_wall_ms: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<Trial>,
}

impl ResultTable {
    pub fn row(&self, algorithm: Algorithm, ratio: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.ratio == ratio)
    }

    pub fn trials_of(&self, algorithm: Algorithm) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(move |t| t.algorithm == algorithm)
    }
}

/// Solves one instance with one algorithm and returns the decoded plan.
pub fn solve(
    algorithm: Algorithm,
    dags: &[DagWorkload],
    env: &Environment,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Schedule, BenchError> {
    let params = cfg.pso.clone().with_seed(seed);
    Ok(match algorithm {
        Algorithm::Psoga => psoga::run(dags, env, &params)?.schedule,
        Algorithm::Prepso => pre_pso_run(dags, env, &params)?.schedule,
        Algorithm::Ga => ga_run(dags, env, &params, &cfg.ga)?.schedule,
        Algorithm::Greedy => greedy_offload(dags, env)?.schedule,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool, BenchError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| BenchError::Config(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| BenchError::Config(e.to_string()))
}

/// Copies of `dags` with deadline `ratio * H` for each DAG.
pub fn with_deadlines(dags: &[DagWorkload], h: &[f64], ratio: f64) -> Vec<DagWorkload> {
    dags.iter()
        .zip(h)
        .map(|(d, h)| {
            let mut d = d.clone();
            d.deadline = ratio * h;
            d
        })
        .collect()
}

/// Runs every (ratio, algorithm, trial) combination. Trial `i` uses seed
/// `cfg.seed + i` whatever the algorithm; results come back in a fixed
/// order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, BenchError> {
    cfg.validate()?;
    let env = cfg.build_environment()?;
    let dags = cfg.build_workloads(&env)?;
    let h = dags.iter().map(|d| heft_makespan(d, &env)).collect::<Result<Vec<_>, _>>()?;
    if let Some(i) = h.iter().position(|&h| h <= 0.0) {
        return Err(BenchError::Config(format!("dag {} has zero HEFT makespan; deadlines would be zero", dags[i].id)));
    }
    let instances: Vec<Vec<DagWorkload>> = cfg.deadline_ratios.iter().map(|&r| with_deadlines(&dags, &h, r)).collect();

    let mut jobs = Vec::new();
    for (ri, &ratio) in cfg.deadline_ratios.iter().enumerate() {
        for &alg in &cfg.algorithms {
            for i in 0..cfg.repetitions {
                jobs.push((ri, ratio, alg, i));
            }
        }
    }
    let pool = thread_pool()?;
    let trials: Vec<Trial> = pool.install(|| {
        jobs.par_iter()
            .map(|&(ri, ratio, algorithm, index)| {
                let seed = cfg.seed + index as u64;
                let clock = Instant::now();
                let s = solve(algorithm, &instances[ri], &env, cfg, seed)?;
                Ok(Trial {
                    algorithm,
                    ratio,
                    index,
                    seed,
                    feasible: s.feasible,
                    cost: s.cost.total,
                    makespan: s.makespan(),
                    wall_ms: clock.elapsed().as_secs_f64() * 1e3,
                })
            })
            .collect::<Result<_, BenchError>>()
    })?;

    let rows = trials
        .chunks(cfg.repetitions)
        .map(|group| {
            let n = group.len() as f64;
            let feasible: Vec<&Trial> = group.iter().filter(|t| t.feasible).collect();
            ResultRow {
                algorithm: group[0].algorithm,
                ratio: group[0].ratio,
                mean_cost: (!feasible.is_empty()).then(|| feasible.iter().map(|t| t.cost).sum::<f64>() / feasible.len() as f64),
                mean_cost_all: group.iter().map(|t| t.cost).sum::<f64>() / n,
                feasible_rate: feasible.len() as f64 / n,
                mean_makespan: group.iter().map(|t| t.makespan).sum::<f64>() / n,
                mean_wall_ms: group.iter().map(|t| t.wall_ms).sum::<f64>() / n,
                reps: group.len(),
                seed: cfg.seed,
            }
        })
        .collect();
    Ok(ResultTable { rows, trials })
}
