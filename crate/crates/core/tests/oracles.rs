//! Independent oracles: grid search for the optimum, brute-force cycle
//! enumeration for support graphs, and a hand-rolled Wardrop check.

use std::collections::BTreeSet;

use mixtoll::equilibrium::{enumerate_equilibria, iterate_best_response, worst_in_set, EQ_TOL};
use mixtoll::model::{AffineLatency, Network, Routing, SupportGraph, TollSchedule, SUPPORT_TOL};
use mixtoll::optimal::{make_acyclic, solve_optimal, SolveMode};
use mixtoll::rng::SeededRng;
use mixtoll::scenario::{generate_instance, InstanceGenSpec};
use mixtoll::tolling::anonymous_tolls;

fn cost_of(net: &Network, rows: &[Vec<f64>]) -> f64 {
    net.roads()
        .iter()
        .zip(rows)
        .map(|(road, z)| {
            let total: f64 = z.iter().sum();
            let lat = road.intercept() + road.slopes().iter().zip(z).map(|(a, x)| a * x).sum::<f64>();
            total * lat
        })
        .sum()
}

/// Splits of `demand` over `n` roads on a grid with `steps` cells.
fn simplex_grid(n: usize, demand: f64, steps: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(n - 1, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, steps, &mut Vec::new(), &mut out);
    out.into_iter().map(|v| v.into_iter().map(|c| demand * c as f64 / steps as f64).collect()).collect()
}

fn grid_minimum(net: &Network, steps: usize) -> f64 {
    let per_type: Vec<Vec<Vec<f64>>> =
        net.type_demands().iter().map(|&d| simplex_grid(net.num_roads(), d, steps)).collect();
    let mut best = f64::INFINITY;
    let mut idx = vec![0; per_type.len()];
    loop {
        let rows: Vec<Vec<f64>> =
            (0..net.num_roads()).map(|i| per_type.iter().zip(&idx).map(|(g, &s)| g[s][i]).collect()).collect();
        best = best.min(cost_of(net, &rows));
        let mut t = 0;
        loop {
            if t == idx.len() {
                return best;
            }
            idx[t] += 1;
            if idx[t] < per_type[t].len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

#[test]
fn exact_optimum_matches_grid_search() {
    for seed in 0..12 {
        for (n, m, steps) in [(2, 1, 400), (3, 1, 120), (2, 2, 120), (3, 2, 24)] {
            let net = generate_instance(&InstanceGenSpec::new(seed, n, m).with_target_k(3.0)).unwrap();
            let opt = solve_optimal(&net, SolveMode::Exact).unwrap();
            let grid = grid_minimum(&net, steps);
            assert!(opt.cost <= grid + 1e-12, "seed {seed} {n}x{m}: exact {} above grid {grid}", opt.cost);
            let h = net.total_demand() / steps as f64;
            assert!(
                grid - opt.cost <= 10.0 * h * h * 3.0 * (n * m) as f64,
                "seed {seed} {n}x{m}: grid {grid} far from {}",
                opt.cost
            );
        }
    }
}

#[test]
fn heuristic_optimum_close_to_exact() {
    for seed in 0..10 {
        let net = generate_instance(&InstanceGenSpec::new(seed, 3, 2)).unwrap();
        let res = solve_optimal(&net, SolveMode::heuristic(seed)).unwrap();
        let gap = res.gap_estimate.expect("small instance has an exact reference");
        assert!(gap >= -1e-9 && gap <= 1e-6 * (1.0 + res.cost), "seed {seed}: gap {gap}");
    }
}

/// Whether a bipartite road/type graph has a simple cycle, found by trying
/// every alternating road/type sequence.
fn brute_force_has_cycle(edges: &BTreeSet<(usize, usize)>, n: usize, m: usize) -> bool {
    fn extend(
        edges: &BTreeSet<(usize, usize)>,
        m: usize,
        roads: &mut Vec<usize>,
        types: &mut Vec<usize>,
        n: usize,
    ) -> bool {
        let last = *roads.last().unwrap();
        // Close the cycle back to the first road.
        if roads.len() >= 2 {
            let first = roads[0];
            if (0..m).any(|t| !types.contains(&t) && edges.contains(&(last, t)) && edges.contains(&(first, t))) {
                return true;
            }
        }
        for t in 0..m {
            if types.contains(&t) || !edges.contains(&(last, t)) {
                continue;
            }
            for r in 0..n {
                if roads.contains(&r) || !edges.contains(&(r, t)) {
                    continue;
                }
                roads.push(r);
                types.push(t);
                let found = extend(edges, m, roads, types, n);
                roads.pop();
                types.pop();
                if found {
                    return true;
                }
            }
        }
        false
    }
    (0..n).any(|start| extend(edges, m, &mut vec![start], &mut Vec::new(), n))
}

#[test]
fn acyclicity_matches_brute_force() {
    let mut rng = SeededRng::new(99);
    let mut cyclic = 0;
    for _ in 0..400 {
        let n = rng.int_in(1, 5);
        let m = rng.int_in(1, 4);
        let p = rng.uniform(0.2, 0.9);
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|_| rng.unit() < p).collect();
        let g = SupportGraph::from_edges(n, m, edges.iter().copied());
        let brute = brute_force_has_cycle(g.edges(), n, m);
        assert_eq!(!g.is_acyclic(), brute, "edges {edges:?}");
        if let Some(cycle) = g.shortest_cycle() {
            cyclic += 1;
            assert!(cycle.len() >= 4 && cycle.len() % 2 == 0, "{cycle:?}");
        }
    }
    assert!(cyclic > 50, "sample should include many cyclic graphs, got {cyclic}");
}

/// Roads whose slopes are equal across types: any per-type split of the
/// optimal road totals is optimal, including fully mixed cyclic ones.
#[test]
fn make_acyclic_on_mixed_optima() {
    let mut rng = SeededRng::new(3);
    for _ in 0..40 {
        let n = rng.int_in(2, 4);
        let m = rng.int_in(2, 3);
        let roads = (0..n)
            .map(|_| {
                let a = rng.uniform(0.5, 2.0);
                AffineLatency::new(vec![a; m], rng.uniform(0.0, 0.3)).unwrap()
            })
            .collect();
        let demands: Vec<f64> = (0..m).map(|_| rng.uniform(0.5, 1.5)).collect();
        let net = Network::parallel((0..m).map(|j| format!("t{j}")).collect(), roads, demands.clone()).unwrap();
        let opt = solve_optimal(&net, SolveMode::Exact).unwrap();
        let d: f64 = demands.iter().sum();
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| demands.iter().map(|&dj| dj * opt.routing.road_total(i) / d).collect()).collect();
        let mixed = Routing::from_rows(&rows);
        assert!((net.social_cost(&mixed).unwrap() - opt.cost).abs() < 1e-9);
        let a = make_acyclic(&net, &mixed, SUPPORT_TOL).unwrap();
        let g = SupportGraph::of(&a, SUPPORT_TOL);
        assert!(!brute_force_has_cycle(g.edges(), n, m));
        assert!((net.social_cost(&a).unwrap() - opt.cost).abs() < 1e-9);
        for i in 0..n {
            assert!((a.road_total(i) - mixed.road_total(i)).abs() < 1e-9);
        }
        for (j, &dj) in demands.iter().enumerate() {
            let s: f64 = (0..n).map(|i| a.edge_flows[(i, j)]).sum();
            assert!((s - dj).abs() < 1e-9);
        }
    }
}

/// Wardrop condition checked from first principles.
fn independent_wardrop(net: &Network, tolls: &TollSchedule, z: &Routing, tol: f64) -> bool {
    let lat: Vec<f64> = net
        .roads()
        .iter()
        .enumerate()
        .map(|(i, r)| r.intercept() + (0..net.num_types()).map(|j| r.slopes()[j] * z.edge_flows[(i, j)]).sum::<f64>())
        .collect();
    (0..net.num_types()).all(|j| {
        let cost = |i: usize| lat[i] + tolls.get(i, j);
        let best = (0..net.num_roads()).map(cost).fold(f64::INFINITY, f64::min);
        (0..net.num_roads()).all(|i| z.edge_flows[(i, j)] <= SUPPORT_TOL || cost(i) <= best + tol)
    })
}

#[test]
fn enumerated_equilibria_pass_independent_check() {
    for seed in 0..30 {
        let net = generate_instance(&InstanceGenSpec::new(seed, 3, 2).with_target_k(2.5)).unwrap();
        let opt = solve_optimal(&net, SolveMode::Exact).unwrap();
        for tolls in [TollSchedule::zeros(&net), anonymous_tolls(&net, &opt.routing).unwrap()] {
            let set = enumerate_equilibria(&net, &tolls, EQ_TOL).unwrap();
            for eq in &set.equilibria {
                eq.routing.check_feasible(&net).unwrap();
                assert!(independent_wardrop(&net, &tolls, &eq.routing, 1e-7), "seed {seed}");
                let rows: Vec<Vec<f64>> =
                    eq.routing.edge_flows.row_iter().map(|r| r.iter().copied().collect()).collect();
                assert!((cost_of(&net, &rows) - eq.cost).abs() < 1e-9);
            }
        }
    }
}

/// Best response from random starts lands on an equilibrium whose cost the
/// enumeration already covers.
#[test]
fn best_response_limits_are_enumerated() {
    let mut rng = SeededRng::new(17);
    for seed in 0..25 {
        let net = generate_instance(&InstanceGenSpec::new(seed, 3, 2).with_target_k(2.0)).unwrap();
        let tolls = TollSchedule::zeros(&net);
        let set = enumerate_equilibria(&net, &tolls, EQ_TOL).unwrap();
        let worst = worst_in_set(&net, &tolls, &set, EQ_TOL).cost;
        for _ in 0..3 {
            let rows: Vec<Vec<f64>> =
                (0..net.num_roads()).map(|_| (0..net.num_types()).map(|_| rng.unit()).collect()).collect();
            let d = net.type_demands();
            let col_sums: Vec<f64> = (0..net.num_types()).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
            let start: Vec<Vec<f64>> =
                rows.iter().map(|r| r.iter().enumerate().map(|(j, x)| x / col_sums[j] * d[j]).collect()).collect();
            let (z, _) = iterate_best_response(&net, &tolls, &Routing::from_rows(&start), 50_000, 1e-11).unwrap();
            assert!(independent_wardrop(&net, &tolls, &z, 1e-6));
            let c = net.social_cost(&z).unwrap();
            assert!(c <= worst + 1e-6, "seed {seed}: best response cost {c} above worst {worst}");
            let near = set.equilibria.iter().any(|e| e.routing.max_abs_diff(&z) < 1e-5);
            assert!(near || set.is_degenerate(), "seed {seed}: limit not among enumerated equilibria");
        }
    }
}
