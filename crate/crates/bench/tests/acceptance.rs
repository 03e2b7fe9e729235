//! Acceptance run: one PASS/FAIL line per top-level criterion.
//!
//! Every check builds its own expected values (brute force, hand formulas,
//! a separate event-by-event replay) instead of trusting the code under test.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use offload_bench::config::{Algorithm, ExperimentConfig};
use offload_bench::run_experiment;
use offload_bench::stats::spearman;
use offload_core::baselines::{ga_run, greedy_offload, GaParams};
use offload_core::evaluator::{brute_force_best, OracleOutcome};
use offload_core::heft::{derive_deadlines, heft_makespan, heft_schedule, DeadlinePolicy};
use offload_core::model::presets::{generate_workload, Arch};
use offload_core::model::random::{random_dag, random_environment, random_instance};
use offload_core::model::{Dataset, Layer, Tier};
use offload_core::preprocess::{expand_assignment, merge, merge_all};
use offload_core::psoga::{
    compare, crossover_segment, inertia_of_distance, mutate_at, random_orders, run, FitnessKey, PsoParams,
};
use offload_core::{Assignment, DagWorkload, Environment, Instance, Schedule};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------------------
// 1. oracle optimality

fn oracle_optimality() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut instances = Vec::new();
    while instances.len() < 20 {
        let layers = rng.gen_range(3..=6);
        let (env, mut dags) = random_instance(&mut rng, layers, 6);
        let ratio = rng.gen_range(1.2..3.0);
        for d in &mut dags {
            d.deadline = ratio * heft_makespan(d, &env).map_err(|e| e.to_string())?;
        }
        if let OracleOutcome::Optimal { cost, .. } = brute_force_best(&dags, &env).map_err(|e| e.to_string())? {
            instances.push((env, dags, cost.total));
        }
    }

    let seeds = 0..3u64;
    let (mut runs, mut pso_hits, mut ga_hits) = (0, 0, 0);
    for (i, (env, dags, opt)) in instances.iter().enumerate() {
        let g = greedy_offload(dags, env).map_err(|e| e.to_string())?;
        ensure(!g.schedule.feasible || g.schedule.cost.total >= opt - 1e-12, || {
            format!("greedy cost {} below optimum {opt} on instance {i}", g.schedule.cost.total)
        })?;
        for seed in seeds.clone() {
            runs += 1;
            let params = PsoParams::default().with_seed(seed);
            let p = run(dags, env, &params).map_err(|e| e.to_string())?;
            pso_hits += (p.key.feasible && (p.key.value - opt).abs() <= 1e-9) as usize;
            let g = ga_run(dags, env, &params, &GaParams::default()).map_err(|e| e.to_string())?;
            ga_hits += (g.key.feasible && (g.key.value - opt).abs() <= 1e-9) as usize;
        }
    }
    let elapsed = clock.elapsed();
    let detail = format!(
        "{} instances, psoga {pso_hits}/{runs}, ga {ga_hits}/{runs}, greedy never below optimum, {:.1}s",
        instances.len(),
        elapsed.as_secs_f64()
    );
    ensure(pso_hits * 10 >= runs * 9, || format!("psoga below 90%: {detail}"))?;
    ensure(ga_hits * 10 >= runs * 7, || format!("ga below 70%: {detail}"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("over 2 min: {detail}"))?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 2. comparator laws

fn comparator_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let values = [0.0, 0.5, 1.0, 1.0 + 1e-12, 2.0, f64::INFINITY];
    let keys: Vec<FitnessKey> = (0..40)
        .map(|_| {
            let v = *values.choose(&mut rng).unwrap();
            if rng.gen_bool(0.5) {
                FitnessKey::feasible(v)
            } else {
                FitnessKey::infeasible(v)
            }
        })
        .collect();
    let mut triples = 0;
    for a in &keys {
        for b in &keys {
            let ab = compare(a, b);
            ensure(ab == compare(b, a).reverse(), || format!("antisymmetry fails on {a:?} {b:?}"))?;
            ensure((ab == Ordering::Equal) == (a == b), || format!("equal keys compare unequal: {a:?} {b:?}"))?;
            if a.feasible && !b.feasible {
                ensure(ab == Ordering::Less, || format!("feasible {a:?} does not beat infeasible {b:?}"))?;
            }
            if a.feasible == b.feasible {
                let expect = a.value.partial_cmp(&b.value).unwrap();
                ensure(ab == expect, || format!("{a:?} vs {b:?}: {ab:?}, expected {expect:?}"))?;
            }
            for c in &keys {
                triples += 1;
                if ab != Ordering::Greater && compare(b, c) != Ordering::Greater {
                    ensure(compare(a, c) != Ordering::Greater, || format!("transitivity fails on {a:?} {b:?} {c:?}"))?;
                }
            }
        }
    }
    Ok(format!("{triples} ordered triples over {} sampled keys", keys.len()))
}

// ---------------------------------------------------------------------------
// 3. crossover and mutation vectors

fn property_vectors() -> Outcome {
    let plan = |s: [usize; 4]| Assignment { servers: s.to_vec(), orders: vec![0, 1, 2, 3] };
    let y = crossover_segment(&plan([0, 0, 1, 1]), &plan([0, 1, 2, 3]), 1, 2);
    ensure(y.servers == [0, 1, 2, 1], || format!("pBest crossover gave {:?}", y.servers))?;
    let y = crossover_segment(&plan([0, 3, 3, 3]), &plan([0, 1, 2, 3]), 0, 1);
    ensure(y.servers == [0, 1, 3, 3], || format!("gBest crossover gave {:?}", y.servers))?;
    let up = mutate_at(&plan([0, 0, 2, 3]), 1, 1);
    ensure(up.servers == [0, 1, 2, 3], || format!("mutation gave {:?}", up.servers))?;
    let down = mutate_at(&up, 1, 0);
    ensure(down.servers == [0, 0, 2, 3], || format!("reverse mutation gave {:?}", down.servers))?;
    ensure(y.orders == [0, 1, 2, 3] && down.orders == [0, 1, 2, 3], || "orders changed".into())?;
    Ok("(0,1,2,1), (0,1,3,3), (0,0,2,3)<->(0,1,2,3)".into())
}

// ---------------------------------------------------------------------------
// 4. adaptive inertia

fn adaptive_inertia() -> Outcome {
    let p = PsoParams::default();
    let reference = |d: f64| 0.9 - (0.9 - 0.4) * (d / (d - 1.01)).exp();
    ensure(inertia_of_distance(0.0, &p) == p.w_min, || format!("w(0) = {}", inertia_of_distance(0.0, &p)))?;
    let mid = inertia_of_distance(0.5, &p);
    ensure((mid - 0.71243).abs() <= 1e-4, || format!("w(0.5) = {mid}"))?;
    ensure((mid - reference(0.5)).abs() <= 1e-12, || format!("w(0.5) = {mid}, reference {}", reference(0.5)))?;
    let n = 10_000;
    let mut prev = inertia_of_distance(0.0, &p);
    let mut max_jump: f64 = 0.0;
    for i in 1..=n {
        let d = i as f64 / n as f64;
        let w = inertia_of_distance(d, &p);
        ensure(w >= prev, || format!("w decreases at d = {d}: {prev} -> {w}"))?;
        ensure((w - reference(d)).abs() <= 1e-12, || format!("w({d}) = {w}, reference {}", reference(d)))?;
        max_jump = max_jump.max(w - prev);
        prev = w;
    }
    // the reference curve is steepest near d = 0.505, with slope about 0.73
    ensure(max_jump <= 0.75 / n as f64, || format!("jump of {max_jump} between grid points"))?;
    Ok(format!("w(0)={}, w(0.5)={mid:.5}, w(1)={prev:.6}, max step {max_jump:.2e}", p.w_min))
}

// ---------------------------------------------------------------------------
// 5. merge

fn chain(n: usize, rng: &mut ChaCha8Rng) -> DagWorkload {
    let layers = (0..n)
        .map(|i| Layer {
            id: i,
            dag_id: 0,
            compute_amount: rng.gen_range(0.1..2.0),
            inputs: if i == 0 { vec![] } else { vec![i - 1] },
            outputs: if i + 1 == n { vec![] } else { vec![i] },
            pinned_server: (i == 0).then_some(0),
        })
        .collect();
    let datasets = (0..n.saturating_sub(1))
        .map(|i| Dataset { id: i, size: rng.gen_range(0.1..3.0), producer: Some(i), consumers: vec![i + 1] })
        .collect();
    DagWorkload {
        id: 0,
        layers,
        edges: (1..n).map(|i| (i - 1, i)).collect(),
        datasets,
        deadline: 100.0,
        origin_device: Some(0),
    }
}

fn diamond(rng: &mut ChaCha8Rng) -> DagWorkload {
    let edges = [(0, 1), (0, 2), (1, 3), (2, 3)];
    let layers = (0..4)
        .map(|i| Layer {
            id: i,
            dag_id: 0,
            compute_amount: rng.gen_range(0.1..2.0),
            inputs: edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect(),
            outputs: if i < 3 { vec![i] } else { vec![] },
            pinned_server: (i == 0).then_some(0),
        })
        .collect();
    let datasets = (0..3)
        .map(|i| Dataset {
            id: i,
            size: rng.gen_range(0.1..3.0),
            producer: Some(i),
            consumers: edges.iter().filter(|e| e.0 == i).map(|e| e.1).collect(),
        })
        .collect();
    DagWorkload { id: 0, layers, edges: edges.to_vec(), datasets, deadline: 100.0, origin_device: Some(0) }
}

fn merge_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    for n in 1..=40 {
        let (m, r) = merge(&chain(n, &mut rng));
        ensure(m.len() == 1 && r.merged_layer_count == 1, || format!("chain of {n} merged to {}", m.len()))?;
    }
    for _ in 0..10 {
        let d = diamond(&mut rng);
        let (m, r) = merge(&d);
        ensure(m == d && r.merged_layer_count == 4, || "diamond changed under merge".into())?;
    }

    let mut compressions = Vec::new();
    for seed in 0..10 {
        let (_, r) = merge(&generate_workload(Arch::GoogLeNetLike, 0, seed));
        compressions.push(r.compression());
    }
    let worst = compressions.iter().map(|c| (c - 0.48).abs()).fold(0.0, f64::max);
    ensure(worst <= 0.10, || format!("googlenet-like compression {compressions:?}"))?;

    let mut pairs = 0;
    for _ in 0..300 {
        let env = random_environment(&mut rng, 6);
        let origin = env.servers_of_tier(Tier::Device).next().unwrap();
        let dags: Vec<DagWorkload> = (0..rng.gen_range(1..=2))
            .map(|i| {
                let n = rng.gen_range(1..=12);
                random_dag(&mut rng, i, n, origin, 100.0)
            })
            .collect();
        let (merged, reports) = merge_all(&dags);
        for m in &merged {
            ensure(merge(m).0 == *m, || "merge is not idempotent".into())?;
        }
        let minst = Instance::new(&merged).map_err(|e| e.to_string())?;
        let servers =
            minst.layers().iter().map(|l| l.pinned.unwrap_or_else(|| rng.gen_range(0..env.len()))).collect();
        let ma = Assignment { servers, orders: random_orders(&minst, &mut rng) };
        let ms = minst.simulate(&ma, &env).map_err(|e| e.to_string())?;
        let oa = expand_assignment(&ma, &merged, &reports, &dags);
        let os = Instance::new(&dags).and_then(|i| i.simulate(&oa, &env)).map_err(|e| e.to_string())?;
        ensure(close(ms.cost.total, os.cost.total, 1e-9), || format!("cost {} vs {}", ms.cost.total, os.cost.total))?;
        ensure(close(ms.makespan(), os.makespan(), 1e-9), || format!("makespan {} vs {}", ms.makespan(), os.makespan()))?;
        pairs += 1;
    }
    let mean = compressions.iter().sum::<f64>() / compressions.len() as f64;
    Ok(format!(
        "chains 1..40 -> 1 layer, diamonds fixed, googlenet-like compression mean {:.1}% (worst off by {:.1} pp), {pairs} merged/expanded pairs agree",
        mean * 100.0,
        worst * 100.0
    ))
}

// ---------------------------------------------------------------------------
// 6. schedule semantics

struct Replay {
    start: Vec<f64>,
    end: Vec<f64>,
    on: Vec<Option<f64>>,
    off: Vec<f64>,
    completion: Vec<f64>,
    compute_cost: f64,
    transfer_cost: f64,
}

/// Walks the placement one dispatch event at a time, straight from the DAG
/// description: pick the ready layer with the smallest priority, wait for
/// the server's lease and for every parent's data, run, then hold the
/// server while its outputs leave for other servers.
fn replay(dags: &[DagWorkload], env: &Environment, a: &Assignment) -> Replay {
    let mut global = HashMap::new();
    let mut owner = Vec::new();
    for (k, d) in dags.iter().enumerate() {
        for l in &d.layers {
            global.insert((k, l.id), owner.len());
            owner.push(k);
        }
    }
    let n = owner.len();
    let mut parents: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, d) in dags.iter().enumerate() {
        for &(u, v) in &d.edges {
            let sizes: Vec<f64> = d
                .datasets
                .iter()
                .filter(|ds| ds.producer == Some(u) && ds.consumers.contains(&v))
                .map(|ds| ds.size)
                .collect();
            let (gu, gv) = (global[&(k, u)], global[&(k, v)]);
            children[gu].push((gv, sizes.iter().sum()));
            parents[gv].push((gu, sizes));
        }
    }
    let compute: Vec<f64> = dags.iter().flat_map(|d| d.layers.iter().map(|l| l.compute_amount)).collect();

    let m = env.len();
    let mut done = vec![false; n];
    let mut start = vec![f64::NAN; n];
    let mut end = vec![f64::NAN; n];
    let mut lease: Vec<f64> = vec![0.0; m];
    let mut on = vec![None; m];
    let mut broken = vec![false; dags.len()];
    let mut transfer_cost = 0.0;
    for _ in 0..n {
        let next = (0..n)
            .filter(|&j| !done[j] && parents[j].iter().all(|(p, _)| done[*p]))
            .min_by_key(|&j| a.orders[j])
            .expect("a ready layer");
        let s = a.servers[next];
        let mut t = lease[s];
        for (p, sizes) in &parents[next] {
            let ps = a.servers[*p];
            let mut ready = end[*p];
            if ps != s {
                let link = env.link(ps, s);
                let payload: f64 = sizes.iter().sum();
                if link.bandwidth > 0.0 {
                    ready += payload / link.bandwidth;
                } else {
                    broken[owner[next]] = true;
                }
                transfer_cost += sizes.iter().map(|z| z * link.transfer_cost).sum::<f64>();
            }
            t = t.max(ready);
        }
        start[next] = t;
        end[next] = t + compute[next] / env.server(s).power;
        let mut hold = end[next];
        for (c, payload) in &children[next] {
            let cs = a.servers[*c];
            if cs != s && env.link(s, cs).bandwidth > 0.0 {
                hold += payload / env.link(s, cs).bandwidth;
            }
        }
        lease[s] = hold;
        if on[s].is_none() {
            on[s] = Some(t);
        }
        done[next] = true;
    }
    let completion = (0..dags.len())
        .map(|k| {
            if broken[k] {
                f64::INFINITY
            } else {
                (0..n).filter(|&j| owner[j] == k).map(|j| end[j]).fold(0.0, f64::max)
            }
        })
        .collect();
    let compute_cost = on
        .iter()
        .enumerate()
        .filter_map(|(s, o)| o.map(|o| env.server(s).cost_rate * (lease[s] - o)))
        .sum();
    Replay { start, end, on, off: lease, completion, compute_cost, transfer_cost }
}

fn verify(dags: &[DagWorkload], env: &Environment, a: &Assignment, s: &Schedule) -> Result<(), String> {
    let r = replay(dags, env, a);
    let tol = 1e-9;
    for (j, t) in s.layers.iter().enumerate() {
        ensure(close(t.start, r.start[j], tol) && close(t.end, r.end[j], tol), || {
            format!("layer {j}: ({}, {}) vs replay ({}, {})", t.start, t.end, r.start[j], r.end[j])
        })?;
    }
    for (srv, u) in s.servers.iter().enumerate() {
        match (u, r.on[srv]) {
            (None, None) => {}
            (Some(u), Some(on)) => ensure(close(u.on, on, tol) && close(u.off, r.off[srv], tol), || {
                format!("server {srv}: [{}, {}] vs replay [{on}, {}]", u.on, u.off, r.off[srv])
            })?,
            _ => return Err(format!("server {srv} usage disagrees with replay")),
        }
    }
    for (k, (&c, &rc)) in s.dag_completion.iter().zip(&r.completion).enumerate() {
        ensure(close(c, rc, tol), || format!("dag {k} completion {c} vs replay {rc}"))?;
    }
    ensure(close(s.cost.compute_cost, r.compute_cost, tol), || {
        format!("compute cost {} vs replay {}", s.cost.compute_cost, r.compute_cost)
    })?;
    ensure(close(s.cost.transfer_cost, r.transfer_cost, tol), || {
        format!("transfer cost {} vs replay {}", s.cost.transfer_cost, r.transfer_cost)
    })?;
    let feasible = r.completion.iter().zip(dags).all(|(c, d)| *c <= d.deadline);
    ensure(s.feasible == feasible, || format!("feasible {} vs replay {feasible}", s.feasible))?;

    // direct invariants on the schedule itself
    ensure(s.cost.total == s.cost.compute_cost + s.cost.transfer_cost, || "cost is not additive".into())?;
    let inst = Instance::new(dags).map_err(|e| e.to_string())?;
    for (j, l) in inst.layers().iter().enumerate() {
        for e in &l.parents {
            let (p, c) = (&s.layers[e.layer], &s.layers[j]);
            let delay = if p.server == c.server { 0.0 } else { e.payload / env.link(p.server, c.server).bandwidth };
            if delay.is_finite() {
                ensure(c.start + 1e-12 >= p.end + delay, || format!("layer {j} starts before its input arrives"))?;
            }
        }
    }
    for srv in 0..env.len() {
        let mut spans: Vec<(f64, f64)> =
            s.layers.iter().filter(|t| t.server == srv).map(|t| (t.start, t.end)).collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        ensure(spans.windows(2).all(|w| w[0].1 <= w[1].0), || format!("overlap on server {srv}"))?;
    }
    Ok(())
}

fn schedule_semantics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut infeasible = 0;
    let mut transfers = 0;
    for call in 0..1000 {
        let layers = rng.gen_range(1..=9);
        let (env, mut dags) = random_instance(&mut rng, layers, 7);
        for d in &mut dags {
            d.deadline = rng.gen_range(0.5..20.0);
        }
        let inst = Instance::new(&dags).map_err(|e| e.to_string())?;
        let servers = inst.layers().iter().map(|l| l.pinned.unwrap_or_else(|| rng.gen_range(0..env.len()))).collect();
        let orders = if rng.gen_bool(0.5) {
            random_orders(&inst, &mut rng)
        } else {
            let mut o: Vec<usize> = (0..inst.len()).collect();
            o.shuffle(&mut rng);
            o
        };
        let a = Assignment { servers, orders };
        let s = inst.simulate(&a, &env).map_err(|e| e.to_string())?;
        ensure(s == inst.simulate(&a, &env).map_err(|e| e.to_string())?, || format!("call {call} not deterministic"))?;
        verify(&dags, &env, &a, &s).map_err(|e| format!("call {call}: {e}"))?;
        infeasible += !s.feasible as usize;
        transfers += s.transfers.len();
    }
    Ok(format!("1000 calls match the replay ({infeasible} infeasible, {transfers} transfers)"))
}

// ---------------------------------------------------------------------------
// 7. deadline trend

fn deadline_trend() -> Outcome {
    let clock = Instant::now();
    let cfg = ExperimentConfig::from_json(
        r#"{
            "environment": {"preset": "desk"},
            "workloads": {"generate": [{"arch": "alexnet-like", "per_device": 1}]},
            "deadline_ratios": [1.2, 1.5, 3.0, 5.0, 8.0],
            "algorithms": ["psoga"],
            "repetitions": 10,
            "seed": 1
        }"#,
    )
    .map_err(|e| e.to_string())?;
    let table = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    let feasible: Vec<_> = table.trials_of(Algorithm::Psoga).filter(|t| t.feasible).collect();
    let x: Vec<f64> = feasible.iter().map(|t| t.ratio).collect();
    let y: Vec<f64> = feasible.iter().map(|t| t.cost).collect();
    let means: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{}:{}", r.ratio, r.mean_cost.map_or("none".into(), |c| format!("{c:.6}"))))
        .collect();
    let s = spearman(&x, &y).ok_or("fewer than three feasible trials or constant costs")?;
    let last = table.row(Algorithm::Psoga, 8.0).ok_or("no ratio-8 row")?;
    let zeros = table.trials_of(Algorithm::Psoga).filter(|t| t.ratio == 8.0 && t.feasible && t.cost == 0.0).count();
    let detail = format!(
        "rho {:.3}, p {:.2e}, n {}; means [{}]; ratio 8: {zeros}/{} trials at zero cost; {:.0}s",
        s.rho,
        s.p_value,
        s.n,
        means.join(" "),
        last.reps,
        elapsed.as_secs_f64()
    );
    ensure(s.rho <= 0.0 && s.p_value < 0.05, || format!("no significant decrease: {detail}"))?;
    ensure(last.mean_cost == Some(0.0) && last.feasible_rate == 1.0, || format!("ratio-8 cost is not 0: {detail}"))?;
    ensure(elapsed < Duration::from_secs(600), || format!("over 10 min: {detail}"))?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 8. HEFT

fn heft_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut slack: f64 = 0.0;
    for i in 0..100 {
        let env = random_environment(&mut rng, 8);
        let origin = env.servers_of_tier(Tier::Device).next().unwrap();
        let n = rng.gen_range(1..=20);
        let dag = random_dag(&mut rng, 0, n, origin, 1.0);
        let plan = heft_schedule(&dag, &env).map_err(|e| e.to_string())?;
        let inst = Instance::new(std::slice::from_ref(&dag)).map_err(|e| e.to_string())?;
        for (k, l) in inst.layers().iter().enumerate() {
            for e in &l.children {
                ensure(plan.ranks[k] >= plan.ranks[e.layer], || {
                    format!("dag {i}: rank {} of layer {k} below child rank {}", plan.ranks[k], plan.ranks[e.layer])
                })?;
            }
        }
        let s = inst.simulate(&plan.assignment(), &env).map_err(|e| e.to_string())?;
        ensure(s.makespan() <= plan.makespan + 1e-9, || {
            format!("dag {i}: replay {} exceeds reported {}", s.makespan(), plan.makespan)
        })?;
        slack = slack.max(plan.makespan - s.makespan());
    }
    let table = derive_deadlines(2.0, &DeadlinePolicy::standard());
    let expected = [2.4, 3.0, 6.0, 10.0, 16.0];
    ensure(table.len() == 5 && table.iter().zip(expected).all(|(a, b)| (a - b).abs() <= 1e-12), || {
        format!("H=2 deadlines {table:?}")
    })?;
    Ok(format!("100 DAGs: ranks monotone, replay within reported makespan; H=2 -> {table:?}"))
}

// ---------------------------------------------------------------------------
// 9. reproducibility

const TOY_CONFIG: &str = r#"{
    "environment": {"preset": "desk"},
    "workloads": {"generate": [{"arch": "alexnet-like", "per_device": 1}]},
    "deadline_ratios": [1.5, 5.0],
    "algorithms": ["psoga", "prepso", "ga", "greedy"],
    "repetitions": 3,
    "seed": 11,
    "output_dir": "out",
    "pso": {"population": 20, "max_iters": 60}
}"#;

fn cli_run(config: &Path, out: &Path, threads: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_offload-opt"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .env("OFFLOAD_OPT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("cli failed: {}", String::from_utf8_lossy(&status.stderr)))
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("toy.json");
    std::fs::write(&config, TOY_CONFIG).map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cli_run(&config, &a, "1")?;
    cli_run(&config, &b, "3")?;
    let mut bytes = 0;
    for name in ["results.csv", "trials.csv"] {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        ensure(!x.is_empty() && x == y, || format!("{name} differs between runs"))?;
        bytes += x.len();
    }
    Ok(format!("two CLI runs (1 and 3 threads) wrote identical results.csv and trials.csv ({bytes} bytes)"))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("oracle optimality", oracle_optimality),
        ("fitness comparator laws", comparator_laws),
        ("crossover/mutation vectors", property_vectors),
        ("adaptive inertia", adaptive_inertia),
        ("merge", merge_checks),
        ("schedule semantics", schedule_semantics),
        ("deadline trend", deadline_trend),
        ("heft", heft_checks),
        ("reproducibility", reproducibility),
    ];
    let only = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if only.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
