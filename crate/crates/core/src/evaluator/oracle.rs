//! Exhaustive search over placements and dispatch sequences.

use super::{Assignment, CostBreakdown, EvalError, Instance, Schedule};
use crate::model::{DagWorkload, Environment};

pub const ORACLE_MAX_LAYERS: usize = 8;
pub const ORACLE_MAX_SERVERS: usize = 8;

#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Optimal { assignment: Assignment, cost: CostBreakdown, schedule: Schedule },
    NoneFeasible,
}

impl OracleOutcome {
    pub fn cost(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { cost, .. } => Some(cost.total),
            OracleOutcome::NoneFeasible => None,
        }
    }
}

/// Every linear extension of the precedence relation, in lexicographic order.
fn linear_extensions(inst: &Instance) -> Vec<Vec<usize>> {
    fn extend(inst: &Instance, pending: &mut [usize], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let n = inst.len();
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for k in 0..n {
            if pending[k] != 0 || prefix.contains(&k) {
                continue;
            }
            for e in &inst.layers()[k].children {
                pending[e.layer] -= 1;
            }
            prefix.push(k);
            extend(inst, pending, prefix, out);
            prefix.pop();
            for e in &inst.layers()[k].children {
                pending[e.layer] += 1;
            }
        }
    }
    let mut pending: Vec<usize> = inst.layers().iter().map(|l| l.parents.len()).collect();
    let mut out = Vec::new();
    extend(inst, &mut pending, &mut Vec::new(), &mut out);
    out
}

/// Minimum-cost feasible placement found by enumerating every server
/// choice for every unpinned layer and every precedence-compatible
/// dispatch sequence. Deadlines are taken from the DAGs. Ties keep the
/// first candidate in enumeration order.
pub fn brute_force_best(dags: &[DagWorkload], env: &Environment) -> Result<OracleOutcome, EvalError> {
    let inst = Instance::new(dags)?;
    let n = inst.len();
    if n > ORACLE_MAX_LAYERS || env.len() > ORACLE_MAX_SERVERS {
        return Err(EvalError::InstanceTooLarge { layers: n, servers: env.len() });
    }
    for d in dags {
        d.validate_against(env)?;
    }
    let sequences: Vec<Vec<usize>> = linear_extensions(&inst)
        .into_iter()
        .map(|seq| {
            let mut orders = vec![0; n];
            for (pos, &k) in seq.iter().enumerate() {
                orders[k] = pos;
            }
            orders
        })
        .collect();
    let free: Vec<usize> = (0..n).filter(|&k| inst.layers()[k].pinned.is_none()).collect();
    let mut servers: Vec<usize> = inst.layers().iter().map(|l| l.pinned.unwrap_or(0)).collect();
    let m = env.len();

    let mut best: Option<(f64, Assignment)> = None;
    loop {
        for orders in &sequences {
            let e = inst.evaluate(env, &servers, orders);
            if e.feasible && best.as_ref().map_or(true, |(c, _)| e.total_cost < *c) {
                best = Some((e.total_cost, Assignment { servers: servers.clone(), orders: orders.clone() }));
            }
        }
        // odometer over the unpinned layers
        let mut carry = true;
        for &k in &free {
            servers[k] += 1;
            if servers[k] < m {
                carry = false;
                break;
            }
            servers[k] = 0;
        }
        if carry {
            break;
        }
    }
    Ok(match best {
        Some((_, assignment)) => {
            let schedule = inst.simulate(&assignment, env)?;
            OracleOutcome::Optimal { cost: schedule.cost, assignment, schedule }
        }
        None => OracleOutcome::NoneFeasible,
    })
}
