//! Wardrop equilibria under per-type tolls.
//!
//! For a fixed support pattern the equilibrium conditions are linear in the
//! strategy flows and the per-commodity common costs: used strategies cost
//! exactly `lambda_c`, unused ones at least `lambda_c`, flows are nonnegative
//! and meet demand. Enumerating every pattern therefore finds every
//! equilibrium; a pattern whose equalities leave free directions yields a
//! polytope of equilibria, represented here by its vertices.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::StrategyGame;
use crate::linalg::solve_affine;
use crate::model::{ModelError, Network, Routing, SupportGraph, TollSchedule, SUPPORT_TOL};
use crate::optimal::{active_commodities, valid_masks, EXACT_VAR_CAP};

/// Default absolute tolerance on cost comparisons.
pub const EQ_TOL: f64 = 1e-8;

const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("enumeration supports at most {cap} strategy variables, network has {got}")]
    SizeExceeded { cap: usize, got: usize },
    #[error("no equilibrium found; this indicates a tolerance or solver problem")]
    NoEquilibriumFound,
    #[error("best response did not converge after {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64, last: Box<Routing> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub support: SupportGraph,
    /// Common tolled cost `lambda` of every used strategy, per commodity
    /// (per type on parallel networks).
    pub common_costs: Vec<f64>,
    /// Largest excess of a used strategy's cost over its commodity's minimum.
    pub residual: f64,
}

/// The worst profitable deviation found by [`wardrop_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct WardropViolation {
    pub commodity: usize,
    pub type_idx: usize,
    /// Road (parallel) or path index (general) carrying flow that could do better.
    pub strategy: usize,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WardropOutcome {
    Equilibrium(EquilibriumCertificate),
    Violation(WardropViolation),
}

impl WardropOutcome {
    pub fn certificate(&self) -> Option<&EquilibriumCertificate> {
        match self {
            WardropOutcome::Equilibrium(c) => Some(c),
            WardropOutcome::Violation(_) => None,
        }
    }

    pub fn is_equilibrium(&self) -> bool {
        matches!(self, WardropOutcome::Equilibrium(_))
    }
}

/// Checks the Wardrop conditions for routing `z` under `tolls`.
pub fn wardrop_check(
    network: &Network,
    tolls: &TollSchedule,
    z: &Routing,
    tol: f64,
) -> Result<WardropOutcome, EquilibriumError> {
    z.check_feasible(network)?;
    tolls.check_shape(network)?;
    let game = StrategyGame::new(network);
    let x = game.flatten(&z.strategy_flows(network)?);
    Ok(check_flat(&game, &game.toll_vector(tolls), &x, z, tol))
}

fn check_flat(
    game: &StrategyGame<'_>,
    toll_vec: &DVector<f64>,
    x: &DVector<f64>,
    z: &Routing,
    tol: f64,
) -> WardropOutcome {
    let costs = game.costs(x) + toll_vec;
    let mut common_costs = Vec::with_capacity(game.num_commodities());
    let mut worst: Option<WardropViolation> = None;
    let mut residual: f64 = 0.0;
    for c in 0..game.num_commodities() {
        let range = game.vars_of(c);
        let lambda = range.clone().map(|v| costs[v]).fold(f64::INFINITY, f64::min);
        common_costs.push(lambda);
        for v in range {
            if x[v] > SUPPORT_TOL {
                let excess = costs[v] - lambda;
                residual = residual.max(excess);
                if excess > tol && worst.as_ref().is_none_or(|w| excess > w.excess) {
                    worst = Some(WardropViolation {
                        commodity: c,
                        type_idx: game.vars[v].type_idx,
                        strategy: game.vars[v].strategy,
                        excess,
                    });
                }
            }
        }
    }
    match worst {
        Some(v) => WardropOutcome::Violation(v),
        None => WardropOutcome::Equilibrium(EquilibriumCertificate {
            support: SupportGraph::of(z, SUPPORT_TOL),
            common_costs,
            residual,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// Unique solution of its support pattern, or a vertex of a degenerate one.
    Point,
    /// Barycenter of a degenerate pattern's vertices.
    FaceBarycenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub routing: Routing,
    pub certificate: EquilibriumCertificate,
    pub cost: f64,
    pub kind: EquilibriumKind,
}

/// A support pattern whose equilibria form a polytope of positive dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateFace {
    pub support_mask: u64,
    pub dimension: usize,
    /// Indices into [`EquilibriumSet::equilibria`].
    pub vertices: Vec<usize>,
    /// Index of the vertex average, when it passed the Wardrop check.
    pub barycenter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    pub equilibria: Vec<Equilibrium>,
    pub faces: Vec<DegenerateFace>,
    pub exhaustive: bool,
}

impl EquilibriumSet {
    pub fn is_degenerate(&self) -> bool {
        !self.faces.is_empty()
    }

    pub fn max_cost(&self) -> f64 {
        self.equilibria.iter().map(|e| e.cost).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Enumerates all equilibria under `tolls`.
pub fn enumerate_equilibria(
    network: &Network,
    tolls: &TollSchedule,
    tol: f64,
) -> Result<EquilibriumSet, EquilibriumError> {
    enumerate_impl(network, tolls, None, tol).map(|(set, _)| set)
}

/// Enumerates equilibria of the game in which each type may only use the
/// roads where `allowed` has an edge (parallel networks).
pub fn enumerate_equilibria_within(
    network: &Network,
    tolls: &TollSchedule,
    allowed: &SupportGraph,
    tol: f64,
) -> Result<EquilibriumSet, EquilibriumError> {
    if !network.is_parallel() {
        return Err(ModelError::NotParallel.into());
    }
    enumerate_impl(network, tolls, Some(allowed), tol).map(|(set, _)| set)
}

struct PatternOutcome {
    mask: u64,
    dimension: usize,
    points: Vec<DVector<f64>>,
}

fn enumerate_impl(
    network: &Network,
    tolls: &TollSchedule,
    allowed: Option<&SupportGraph>,
    tol: f64,
) -> Result<(EquilibriumSet, Vec<DVector<f64>>), EquilibriumError> {
    tolls.check_shape(network)?;
    let game = StrategyGame::new(network);
    let nv = game.num_vars();
    if nv > EXACT_VAR_CAP {
        return Err(EquilibriumError::SizeExceeded { cap: EXACT_VAR_CAP, got: nv });
    }
    let allowed_mask: u64 = match allowed {
        None => u64::MAX,
        Some(g) => (0..nv)
            .filter(|&v| {
                let var = game.vars[v];
                // Parallel networks: strategy index is the road index.
                g.contains(var.strategy, var.type_idx)
            })
            .fold(0, |m, v| m | 1 << v),
    };
    let toll_vec = game.toll_vector(tolls);
    let active = active_commodities(&game);
    let scale = 1.0 + network.total_demand();
    let masks = valid_masks(&game, allowed_mask);

    let outcomes: Vec<PatternOutcome> = masks
        .par_iter()
        .map(|&mask| solve_pattern(&game, &toll_vec, &active, mask, allowed_mask, tol, scale))
        .filter(|o| !o.points.is_empty())
        .collect();

    let mut xs: Vec<DVector<f64>> = Vec::new();
    let mut kinds: Vec<EquilibriumKind> = Vec::new();
    let mut faces = Vec::new();
    let dedup_tol = 1e-7 * scale;
    let mut index_of = |x: &DVector<f64>, kind: EquilibriumKind, xs: &mut Vec<DVector<f64>>| {
        if let Some(i) = xs.iter().position(|y| (y - x).amax() <= dedup_tol) {
            i
        } else {
            xs.push(x.clone());
            kinds.push(kind);
            xs.len() - 1
        }
    };
    for o in &outcomes {
        let idx: Vec<usize> = o.points.iter().map(|x| index_of(x, EquilibriumKind::Point, &mut xs)).unique().collect();
        if o.dimension > 0 && idx.len() >= 2 {
            let n = idx.len() as f64;
            let bary = idx.iter().fold(DVector::zeros(nv), |acc, &i| acc + &xs[i]) / n;
            let b = index_of(&bary, EquilibriumKind::FaceBarycenter, &mut xs);
            faces.push(DegenerateFace {
                support_mask: o.mask,
                dimension: o.dimension,
                vertices: idx,
                barycenter: Some(b),
            });
        }
    }

    let mut equilibria = Vec::with_capacity(xs.len());
    let mut kept = Vec::with_capacity(xs.len());
    let mut remap = vec![None; xs.len()];
    for (i, x) in xs.iter().enumerate() {
        let routing = game.routing(x);
        if let WardropOutcome::Equilibrium(certificate) = check_flat(&game, &toll_vec, x, &routing, tol) {
            remap[i] = Some(equilibria.len());
            equilibria.push(Equilibrium {
                cost: network.social_cost_unchecked(&routing.edge_flows),
                routing,
                certificate,
                kind: kinds[i],
            });
            kept.push(x.clone());
        }
    }
    for f in &mut faces {
        f.vertices = f.vertices.iter().filter_map(|&i| remap[i]).collect();
        f.barycenter = f.barycenter.and_then(|i| remap[i]);
    }
    faces.retain(|f| f.vertices.len() >= 2);
    if equilibria.is_empty() {
        return Err(EquilibriumError::NoEquilibriumFound);
    }
    Ok((EquilibriumSet { equilibria, faces, exhaustive: true }, kept))
}

fn solve_pattern(
    game: &StrategyGame<'_>,
    toll_vec: &DVector<f64>,
    active: &[usize],
    mask: u64,
    allowed_mask: u64,
    tol: f64,
    scale: f64,
) -> PatternOutcome {
    let nv = game.num_vars();
    let support: Vec<usize> = (0..nv).filter(|v| mask >> v & 1 == 1).collect();
    let s = support.len();
    let p = active.len();
    let dim = s + p;
    let lambda_col = |c: usize| s + active.iter().position(|&a| a == c).expect("active commodity");
    let empty = PatternOutcome { mask, dimension: 0, points: Vec::new() };

    // Equalities: used strategies cost lambda; demand is met.
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    for (r, &v) in support.iter().enumerate() {
        for (col, &u) in support.iter().enumerate() {
            a[(r, col)] = game.coupling[(v, u)];
        }
        a[(r, lambda_col(game.vars[v].commodity))] = -1.0;
        b[r] = -(game.base[v] + toll_vec[v]);
    }
    for (k, &c) in active.iter().enumerate() {
        for (col, &u) in support.iter().enumerate() {
            if game.vars[u].commodity == c {
                a[(s + k, col)] = 1.0;
            }
        }
        b[s + k] = game.demand(c);
    }
    let Some(sol) = solve_affine(&a, &b) else {
        return empty;
    };

    // Inequalities g . w + h >= 0: nonnegative flows, unused strategies no cheaper.
    let mut g_rows: Vec<DVector<f64>> = Vec::new();
    let mut h: Vec<f64> = Vec::new();
    let mut slack: Vec<f64> = Vec::new();
    for col in 0..s {
        let mut row = DVector::zeros(dim);
        row[col] = 1.0;
        g_rows.push(row);
        h.push(0.0);
        slack.push(1e-9 * scale);
    }
    for v in 0..nv {
        if mask >> v & 1 == 1 || allowed_mask >> v & 1 == 0 {
            continue;
        }
        let c = game.vars[v].commodity;
        if game.demand(c) <= 0.0 {
            continue;
        }
        let mut row = DVector::zeros(dim);
        for (col, &u) in support.iter().enumerate() {
            row[col] = game.coupling[(v, u)];
        }
        row[lambda_col(c)] = -1.0;
        g_rows.push(row);
        h.push(game.base[v] + toll_vec[v]);
        slack.push(tol);
    }

    let to_x = |w: &DVector<f64>| {
        let mut x = DVector::zeros(nv);
        for (col, &v) in support.iter().enumerate() {
            x[v] = if w[col] > SUPPORT_TOL { w[col] } else { 0.0 };
        }
        x
    };
    let feasible = |w: &DVector<f64>| g_rows.iter().zip(&h).zip(&slack).all(|((g, &hh), &sl)| g.dot(w) + hh >= -sl);

    let d = sol.nullity();
    if d == 0 {
        let w = sol.particular;
        let points = if feasible(&w) { vec![to_x(&w)] } else { vec![] };
        return PatternOutcome { mask, dimension: 0, points };
    }

    // Vertex enumeration in the nullspace coordinates y: (G N) y >= -(G w0 + h).
    let w0 = &sol.particular;
    let basis = &sol.null_basis;
    let rows: Vec<DVector<f64>> = g_rows.iter().map(|g| basis.transpose() * g).collect();
    let rhs: Vec<f64> = g_rows.iter().zip(&h).map(|(g, &hh)| -(g.dot(w0) + hh)).collect();
    let mut points: Vec<DVector<f64>> = Vec::new();
    for combo in (0..rows.len()).combinations(d) {
        let m = DMatrix::from_fn(d, d, |r, c| rows[combo[r]][c]);
        let q = DVector::from_iterator(d, combo.iter().map(|&r| rhs[r]));
        let Some(ys) = solve_affine(&m, &q) else {
            continue;
        };
        if ys.nullity() > 0 {
            continue;
        }
        let w = w0 + basis * &ys.particular;
        if !feasible(&w) {
            continue;
        }
        let x = to_x(&w);
        if !points.iter().any(|y| (y - &x).amax() <= 1e-9 * scale) {
            points.push(x);
        }
    }
    PatternOutcome { mask, dimension: d, points }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstEquilibrium {
    pub routing: Routing,
    pub cost: f64,
    /// True when the maximizer came from a search inside a degenerate face.
    pub from_face_search: bool,
}

/// The equilibrium with the largest social cost. On degenerate faces the
/// cost is also maximized along every segment between two vertices; the
/// result over such faces is approximate.
pub fn worst_equilibrium(
    network: &Network,
    tolls: &TollSchedule,
    tol: f64,
) -> Result<WorstEquilibrium, EquilibriumError> {
    let (set, xs) = enumerate_impl(network, tolls, None, tol)?;
    Ok(worst_of(network, tolls, &set, &xs, tol))
}

/// [`worst_equilibrium`] over an already enumerated set.
pub fn worst_in_set(network: &Network, tolls: &TollSchedule, set: &EquilibriumSet, tol: f64) -> WorstEquilibrium {
    let game = StrategyGame::new(network);
    let xs: Vec<DVector<f64>> = set
        .equilibria
        .iter()
        .map(|e| game.flatten(&e.routing.strategy_flows(network).expect("enumerated routings carry strategy flows")))
        .collect();
    worst_of(network, tolls, set, &xs, tol)
}

fn worst_of(
    network: &Network,
    tolls: &TollSchedule,
    set: &EquilibriumSet,
    xs: &[DVector<f64>],
    tol: f64,
) -> WorstEquilibrium {
    let game = StrategyGame::new(network);
    let toll_vec = game.toll_vector(tolls);
    let (mut best_i, mut best_cost) = (0, f64::NEG_INFINITY);
    for (i, e) in set.equilibria.iter().enumerate() {
        if e.cost > best_cost {
            best_i = i;
            best_cost = e.cost;
        }
    }
    let mut best =
        WorstEquilibrium { routing: set.equilibria[best_i].routing.clone(), cost: best_cost, from_face_search: false };
    for face in &set.faces {
        for (&i, &j) in face.vertices.iter().tuple_combinations() {
            let (u, w) = (&xs[i], &xs[j]);
            let c0 = game.social_cost(u);
            let c1 = game.social_cost(w);
            let cm = game.social_cost(&((u + w) * 0.5));
            let alpha = 2.0 * c0 + 2.0 * c1 - 4.0 * cm;
            let beta = c1 - c0 - alpha;
            if alpha >= 0.0 {
                continue;
            }
            let t = -beta / (2.0 * alpha);
            if !(0.0..=1.0).contains(&t) {
                continue;
            }
            let x = u + (w - u) * t;
            let cost = game.social_cost(&x);
            if cost > best.cost + 1e-12 * best.cost.abs().max(1.0) {
                let routing = game.routing(&x);
                if check_flat(&game, &toll_vec, &x, &routing, tol).is_equilibrium() {
                    best = WorstEquilibrium { routing, cost, from_face_search: true };
                }
            }
        }
    }
    best
}

/// Damped round-robin best response: each commodity in turn moves half of
/// the amount that would equalize a costlier strategy with its cheapest one.
pub fn iterate_best_response(
    network: &Network,
    tolls: &TollSchedule,
    z0: &Routing,
    max_iters: usize,
    tol: f64,
) -> Result<(Routing, usize), EquilibriumError> {
    z0.check_feasible(network)?;
    tolls.check_shape(network)?;
    let game = StrategyGame::new(network);
    let toll_vec = game.toll_vector(tolls);
    let mut x = game.flatten(&z0.strategy_flows(network)?);
    let residual = |x: &DVector<f64>| {
        let costs = game.costs(x) + &toll_vec;
        (0..game.num_commodities())
            .map(|c| {
                let r = game.vars_of(c);
                let min = r.clone().map(|v| costs[v]).fold(f64::INFINITY, f64::min);
                r.filter(|&v| x[v] > SUPPORT_TOL).map(|v| costs[v] - min).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    for it in 0..=max_iters {
        let res = residual(&x);
        if res <= tol {
            return Ok((game.routing(&x), it));
        }
        if it == max_iters {
            return Err(EquilibriumError::NonConvergence {
                iterations: max_iters,
                residual: res,
                last: Box::new(game.routing(&x)),
            });
        }
        for c in 0..game.num_commodities() {
            let range = game.vars_of(c);
            for v in range.clone() {
                let costs = game.costs(&x) + &toll_vec;
                let best =
                    range.clone().min_by(|&a, &b| costs[a].total_cmp(&costs[b])).expect("commodity has strategies");
                let gap = costs[v] - costs[best];
                if v == best || x[v] <= 0.0 || gap <= 0.0 {
                    continue;
                }
                let k = &game.coupling;
                let curvature = k[(v, v)] - k[(v, best)] - k[(best, v)] + k[(best, best)];
                let equalize = if curvature > 0.0 { gap / curvature } else { x[v] };
                let shift = (DAMPING * equalize).min(x[v]);
                x[v] -= shift;
                x[best] += shift;
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AffineLatency;

    fn net(slopes: [[f64; 2]; 2], b: [f64; 2], d: [f64; 2]) -> Network {
        Network::parallel(
            vec!["1".into(), "2".into()],
            vec![
                AffineLatency::new(slopes[0].to_vec(), b[0]).unwrap(),
                AffineLatency::new(slopes[1].to_vec(), b[1]).unwrap(),
            ],
            d.to_vec(),
        )
        .unwrap()
    }

    fn example_a() -> Network {
        net([[2.0, 1.0], [1.0, 2.0]], [0.0, 0.0], [1.0, 1.0])
    }

    fn example_b() -> Network {
        net([[0.0, 0.0], [4.0 / 3.0, 1.0 / 3.0]], [1.0, 0.0], [0.5, 1.0])
    }

    #[test]
    fn reversed_routing_is_equilibrium() {
        let n = example_a();
        let z = Routing::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = wardrop_check(&n, &TollSchedule::zeros(&n), &z, EQ_TOL).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.common_costs, vec![2.0, 2.0]);
    }

    #[test]
    fn violation_reported() {
        let n = example_a();
        let z = Routing::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        match wardrop_check(&n, &TollSchedule::zeros(&n), &z, EQ_TOL).unwrap() {
            WardropOutcome::Violation(v) => assert!(v.excess > 2.0),
            other => panic!("expected violation, got {other:?}"),
        }
        let bad = Routing::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(wardrop_check(&n, &TollSchedule::zeros(&n), &bad, EQ_TOL).is_err());
    }

    #[test]
    fn zero_demand_is_vacuous() {
        let n = net([[1.0, 1.0], [2.0, 1.0]], [0.0, 1.0], [0.0, 0.0]);
        let z = Routing::zeros(&n);
        assert!(wardrop_check(&n, &TollSchedule::zeros(&n), &z, EQ_TOL).unwrap().is_equilibrium());
        let (r, it) = iterate_best_response(&n, &TollSchedule::zeros(&n), &z, 10, 1e-9).unwrap();
        assert_eq!(it, 0);
        assert_eq!(r, z);
    }

    #[test]
    fn example_b_anonymous_certificate() {
        let n = example_b();
        let tolls = TollSchedule::from_rows(&[vec![0.0, 0.0], vec![1.0 / 3.0, 1.0 / 3.0]]).unwrap();
        let z = Routing::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]);
        let cert = wardrop_check(&n, &tolls, &z, EQ_TOL).unwrap();
        let cert = cert.certificate().unwrap();
        assert!((cert.common_costs[0] - 1.0).abs() < 1e-12);
        // Road 2's tolled cost for type 2 equals road 1's cost (latency is shared).
        assert!((cert.common_costs[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example_a_enumeration() {
        let n = example_a();
        let set = enumerate_equilibria(&n, &TollSchedule::zeros(&n), EQ_TOL).unwrap();
        assert!(set.exhaustive);
        let has = |rows: &[Vec<f64>]| {
            let z = Routing::from_rows(rows);
            set.equilibria.iter().any(|e| e.routing.max_abs_diff(&z) < 1e-9)
        };
        assert!(has(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert!(has(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert!(has(&[vec![0.5, 0.5], vec![0.5, 0.5]]));
        assert!(set.is_degenerate());
        let worst = worst_equilibrium(&n, &TollSchedule::zeros(&n), EQ_TOL).unwrap();
        assert!((worst.cost - 4.0).abs() < 1e-9);
    }

    #[test]
    fn single_road_unique() {
        let n = Network::parallel(
            vec!["a".into(), "b".into()],
            vec![AffineLatency::new(vec![1.0, 2.0], 0.5).unwrap()],
            vec![1.0, 0.25],
        )
        .unwrap();
        let set = enumerate_equilibria(&n, &TollSchedule::zeros(&n), EQ_TOL).unwrap();
        assert_eq!(set.equilibria.len(), 1);
        assert!((set.equilibria[0].routing.edge_flows[(0, 1)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn example_b_worst_costs() {
        let n = example_b();
        let w = worst_equilibrium(&n, &TollSchedule::zeros(&n), EQ_TOL).unwrap();
        assert!((w.cost - 1.5).abs() < 1e-9);
        let half = TollSchedule::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let w = worst_equilibrium(&n, &half, EQ_TOL).unwrap();
        assert!((w.cost - 21.0 / 16.0).abs() < 1e-9);
    }

    #[test]
    fn best_response_keeps_equilibrium() {
        let n = example_a();
        let z = Routing::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let (r, it) = iterate_best_response(&n, &TollSchedule::zeros(&n), &z, 100, 1e-9).unwrap();
        assert_eq!(it, 0);
        assert!(r.max_abs_diff(&z) < 1e-12);
    }

    #[test]
    fn best_response_converges() {
        let n = net([[1.0, 3.0], [2.0, 0.5]], [0.2, 0.0], [1.0, 1.5]);
        let z0 = Routing::from_rows(&[vec![1.0, 1.5], vec![0.0, 0.0]]);
        let (r, _) = iterate_best_response(&n, &TollSchedule::zeros(&n), &z0, 10_000, 1e-9).unwrap();
        assert!(wardrop_check(&n, &TollSchedule::zeros(&n), &r, 1e-6).unwrap().is_equilibrium());
    }

    #[test]
    fn nonconvergence_is_reported() {
        let n = net([[1.0, 3.0], [2.0, 0.5]], [0.2, 0.0], [1.0, 1.5]);
        let z0 = Routing::from_rows(&[vec![1.0, 1.5], vec![0.0, 0.0]]);
        let err = iterate_best_response(&n, &TollSchedule::zeros(&n), &z0, 1, 1e-12).unwrap_err();
        assert!(matches!(err, EquilibriumError::NonConvergence { iterations: 1, .. }));
    }
}
