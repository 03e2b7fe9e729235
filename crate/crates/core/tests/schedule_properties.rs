use offload_core::evaluator::total_cost;
use offload_core::model::random::random_instance;
use offload_core::model::{Dataset, Layer, LinkSpec, ServerSpec, Tier};
use offload_core::psoga::random_orders;
use offload_core::{Assignment, DagWorkload, Environment, Instance};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(seed: u64) -> (Environment, Vec<DagWorkload>, Assignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = rng.gen_range(1..=7);
    let (env, dags) = random_instance(&mut rng, layers, 6);
    let inst = Instance::new(&dags).unwrap();
    let servers = inst
        .layers()
        .iter()
        .map(|l| l.pinned.unwrap_or_else(|| rng.gen_range(0..env.len())))
        .collect();
    let orders = if rng.gen_bool(0.5) {
        random_orders(&inst, &mut rng)
    } else {
        let mut o: Vec<usize> = (0..inst.len()).collect();
        o.shuffle(&mut rng);
        o
    };
    (env, dags, Assignment { servers, orders })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn decoded_schedules_are_consistent(seed in any::<u64>()) {
        let (env, dags, a) = random_case(seed);
        let inst = Instance::new(&dags).unwrap();
        let s = inst.simulate(&a, &env).unwrap();
        prop_assert_eq!(&s, &inst.simulate(&a, &env).unwrap());

        for (k, t) in s.layers.iter().enumerate() {
            let exec = inst.layers()[k].compute / env.server(t.server).power;
            prop_assert_eq!(t.end, t.start + exec);
            for e in &inst.layers()[k].parents {
                let p = &s.layers[e.layer];
                let delay = if p.server == t.server { 0.0 } else { e.payload / env.link(p.server, t.server).bandwidth };
                if delay.is_finite() {
                    prop_assert!(t.start >= p.end + delay);
                }
            }
        }
        for srv in 0..env.len() {
            let mut spans: Vec<(f64, f64)> = s.layers.iter().filter(|t| t.server == srv).map(|t| (t.start, t.end)).collect();
            spans.sort_by(|x, y| x.0.total_cmp(&y.0));
            for w in spans.windows(2) {
                prop_assert!(w[0].1 <= w[1].0);
            }
            match s.servers[srv] {
                Some(u) => prop_assert!(u.on <= u.off),
                None => prop_assert!(spans.is_empty()),
            }
        }
        prop_assert_eq!(s.cost.total, s.cost.compute_cost + s.cost.transfer_cost);
        prop_assert!(s.cost.compute_cost >= 0.0 && s.cost.transfer_cost >= 0.0);
        let again = total_cost(&s, &env);
        prop_assert!((again.total - s.cost.total).abs() <= 1e-12 * (1.0 + s.cost.total));

        let e = inst.evaluate(&env, &a.servers, &a.orders);
        prop_assert_eq!(e.feasible, s.feasible);
        prop_assert_eq!(e.total_cost, s.cost.total);
    }

    #[test]
    fn heavier_cross_server_data_never_helps_time_or_transfer_cost(seed in any::<u64>(), bump in 0.01f64..5.0) {
        let (env, dags, a) = random_case(seed);
        let inst = Instance::new(&dags).unwrap();
        let before = inst.simulate(&a, &env).unwrap();
        let Some(tr) = before.transfers.first() else { return Ok(()) };
        let mut heavier = dags.clone();
        let dag = heavier.iter_mut().find(|d| d.id == tr.dag).unwrap();
        dag.datasets.iter_mut().find(|d| d.id == tr.dataset).unwrap().size += bump;
        let after = Instance::new(&heavier).unwrap().simulate(&a, &env).unwrap();
        prop_assert!(after.makespan() >= before.makespan());
        for (x, y) in after.layers.iter().zip(&before.layers) {
            prop_assert!(x.end >= y.end);
        }
        prop_assert!(after.cost.transfer_cost >= before.cost.transfer_cost);
    }
}

/// Delaying the first layer on a paid server can shorten that server's
/// on-interval, so total cost is not monotone in transfer time.
#[test]
fn slower_transfer_can_lower_total_cost() {
    let server = |id, tier, cost_rate| ServerSpec { id, power: 1.0, cost_rate, tier };
    let servers = vec![server(0, Tier::Device, 0.0), server(1, Tier::Edge, 1.0), server(2, Tier::Device, 0.0)];
    let link = LinkSpec { bandwidth: 1.0, transfer_cost: 0.01 };
    let none = LinkSpec::default();
    let env = Environment::new(servers, vec![vec![none, link, none], vec![link, none, link], vec![none, link, none]]).unwrap();
    let pair = |id: usize, origin: usize, head: f64, size: f64| DagWorkload {
        id,
        layers: vec![
            Layer { id: 0, dag_id: id, compute_amount: head, inputs: vec![], outputs: vec![0], pinned_server: Some(origin) },
            Layer { id: 1, dag_id: id, compute_amount: 1.0, inputs: vec![0], outputs: vec![], pinned_server: None },
        ],
        edges: vec![(0, 1)],
        datasets: vec![Dataset { id: 0, size, producer: Some(0), consumers: vec![1] }],
        deadline: 100.0,
        origin_device: Some(origin),
    };
    let a = Assignment { servers: vec![0, 1, 2, 1], orders: vec![0, 2, 1, 3] };
    let cost = |size| {
        let dags = [pair(0, 0, 1.0, size), pair(1, 2, 10.0, 1.0)];
        Instance::new(&dags).unwrap().simulate(&a, &env).unwrap()
    };
    let light = cost(1.0);
    let heavy = cost(3.0);
    // s1 runs 2..3 and 11..12 vs 4..5 and 11..12
    assert_eq!(light.servers[1].unwrap().on, 2.0);
    assert_eq!(heavy.servers[1].unwrap().on, 4.0);
    assert_eq!(light.makespan(), heavy.makespan());
    assert!(heavy.cost.transfer_cost > light.cost.transfer_cost);
    assert!(heavy.cost.total < light.cost.total);
}
