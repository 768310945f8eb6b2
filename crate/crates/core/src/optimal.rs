//! Socially optimal routings.
//!
//! The social cost is an indefinite quadratic in the strategy flows, so the
//! exact solver enumerates support patterns: on each support it solves the
//! stationarity system (equal marginal cost on used strategies plus demand
//! conservation) and keeps the cheapest nonnegative solution. A global
//! minimizer can always be moved, at equal cost, to a support whose system is
//! nonsingular, so skipping singular patterns loses nothing.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::StrategyGame;
use crate::linalg::{project_simplex, solve_affine};
use crate::model::{ModelError, Network, Routing, SupportGraph, SupportNode, SUPPORT_TOL};
use crate::rng::SeededRng;

/// Largest number of strategy variables the exact solver accepts.
pub const EXACT_VAR_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimalError {
    #[error("exact mode supports at most {cap} strategy variables, network has {got}")]
    SizeExceeded { cap: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Exact,
    Heuristic { restarts: usize, seed: u64 },
}

impl SolveMode {
    pub fn heuristic(seed: u64) -> Self {
        SolveMode::Heuristic { restarts: 64, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Enumeration,
    Multistart,
}

/// Support pattern and stationarity multipliers of the exact optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportCertificate {
    /// Bit `v` set when strategy variable `v` is in the support.
    pub support_mask: u64,
    /// Marginal social cost shared by the used strategies of each commodity.
    pub multipliers: Vec<f64>,
    pub patterns_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub routing: Routing,
    pub cost: f64,
    pub method: Method,
    pub certificate: Option<SupportCertificate>,
    /// Heuristic cost minus the exact optimum, when both are known.
    pub gap_estimate: Option<f64>,
}

pub fn solve_optimal(network: &Network, mode: SolveMode) -> Result<OptimizationResult, OptimalError> {
    match mode {
        SolveMode::Exact => solve_exact(network),
        SolveMode::Heuristic { restarts, seed } => {
            let mut res = solve_heuristic(network, restarts.max(1), seed);
            if network.num_strategy_vars() <= EXACT_VAR_CAP {
                let exact = solve_exact(network)?;
                res.gap_estimate = Some(res.cost - exact.cost);
            }
            Ok(res)
        }
    }
}

/// Iterates the masks whose support is valid: each commodity with positive
/// demand uses at least one strategy, commodities without demand use none.
pub(crate) fn valid_masks(game: &StrategyGame<'_>, allowed: u64) -> Vec<u64> {
    let nv = game.num_vars();
    (0u64..(1u64 << nv))
        .filter(|&mask| mask & !allowed == 0)
        .filter(|&mask| {
            (0..game.num_commodities()).all(|c| {
                let used = game.vars_of(c).any(|v| mask >> v & 1 == 1);
                if game.demand(c) > 0.0 {
                    used
                } else {
                    !used
                }
            })
        })
        .collect()
}

pub(crate) fn active_commodities(game: &StrategyGame<'_>) -> Vec<usize> {
    (0..game.num_commodities()).filter(|&c| game.demand(c) > 0.0).collect()
}

struct Candidate {
    mask: u64,
    x: DVector<f64>,
    cost: f64,
    multipliers: Vec<f64>,
}

fn solve_exact(network: &Network) -> Result<OptimizationResult, OptimalError> {
    let game = StrategyGame::new(network);
    let nv = game.num_vars();
    if nv > EXACT_VAR_CAP {
        return Err(OptimalError::SizeExceeded { cap: EXACT_VAR_CAP, got: nv });
    }
    let hessian = game.hessian();
    let active = active_commodities(&game);
    let masks = valid_masks(&game, u64::MAX);
    let scale = 1.0 + network.total_demand();

    let candidates: Vec<Option<Candidate>> = masks
        .par_iter()
        .map(|&mask| {
            let support: Vec<usize> = (0..nv).filter(|v| mask >> v & 1 == 1).collect();
            let s = support.len();
            let dim = s + active.len();
            let mut a = DMatrix::zeros(dim, dim);
            let mut b = DVector::zeros(dim);
            for (r, &v) in support.iter().enumerate() {
                for (col, &u) in support.iter().enumerate() {
                    a[(r, col)] = hessian[(v, u)];
                }
                let c = game.vars[v].commodity;
                let k = active.iter().position(|&ac| ac == c)?;
                a[(r, s + k)] = -1.0;
                b[r] = -game.base[v];
            }
            for (k, &c) in active.iter().enumerate() {
                for (col, &u) in support.iter().enumerate() {
                    if game.vars[u].commodity == c {
                        a[(s + k, col)] = 1.0;
                    }
                }
                b[s + k] = game.demand(c);
            }
            let sol = solve_affine(&a, &b)?;
            if sol.nullity() > 0 {
                return None;
            }
            let mut x = DVector::zeros(nv);
            for (r, &v) in support.iter().enumerate() {
                let val = sol.particular[r];
                if val < -1e-9 * scale {
                    return None;
                }
                x[v] = val.max(0.0);
            }
            let multipliers = (0..active.len()).map(|k| sol.particular[s + k]).collect();
            Some(Candidate { mask, cost: game.social_cost(&x), x, multipliers })
        })
        .collect();

    let patterns_evaluated = masks.len();
    let mut best: Option<Candidate> = None;
    for cand in candidates.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => cand.cost < b.cost - 1e-12 * b.cost.abs().max(1.0),
        };
        if better {
            best = Some(cand);
        }
    }
    // Single-strategy patterns are always nonsingular, so a candidate exists.
    let best = best.expect("vertex supports yield candidates");
    let routing = game.routing(&best.x);
    let mut multipliers = vec![0.0; game.num_commodities()];
    for (k, &c) in active.iter().enumerate() {
        multipliers[c] = best.multipliers[k];
    }
    Ok(OptimizationResult {
        cost: network.social_cost_unchecked(&routing.edge_flows),
        routing,
        method: Method::Enumeration,
        certificate: Some(SupportCertificate { support_mask: best.mask, multipliers, patterns_evaluated }),
        gap_estimate: None,
    })
}

const PG_ITERS: usize = 500;

fn solve_heuristic(network: &Network, restarts: usize, seed: u64) -> OptimizationResult {
    let game = StrategyGame::new(network);
    let max_slope = network.roads().iter().map(|r| r.max_slope()).fold(0.0, f64::max);
    let step0 = if max_slope > 0.0 { 0.1 / max_slope } else { 0.1 };

    let runs: Vec<(f64, DVector<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = SeededRng::substream(seed, r as u64);
            let groups: Vec<Vec<f64>> = network
                .commodities()
                .iter()
                .map(|c| {
                    let w: Vec<f64> = (0..c.strategies.len()).map(|_| rng.unit() + 1e-3).collect();
                    let total: f64 = w.iter().sum();
                    w.iter().map(|x| x / total * c.demand).collect()
                })
                .collect();
            let x = game.flatten(&groups);
            projected_gradient(&game, x, step0)
        })
        .collect();

    // Ordered reduction keeps the result independent of thread scheduling.
    let (_, x) = runs
        .into_iter()
        .fold(None::<(f64, DVector<f64>)>, |acc, (c, x)| match acc {
            Some((bc, bx)) if bc <= c => Some((bc, bx)),
            _ => Some((c, x)),
        })
        .expect("at least one restart");
    let routing = game.routing(&x);
    OptimizationResult {
        cost: network.social_cost_unchecked(&routing.edge_flows),
        routing,
        method: Method::Multistart,
        certificate: None,
        gap_estimate: None,
    }
}

fn project(game: &StrategyGame<'_>, y: &DVector<f64>) -> DVector<f64> {
    let groups: Vec<Vec<f64>> = (0..game.num_commodities())
        .map(|c| {
            let part: Vec<f64> = game.vars_of(c).map(|v| y[v]).collect();
            project_simplex(&part, game.demand(c))
        })
        .collect();
    game.flatten(&groups)
}

fn projected_gradient(game: &StrategyGame<'_>, mut x: DVector<f64>, step0: f64) -> (f64, DVector<f64>) {
    let mut cost = game.social_cost(&x);
    for _ in 0..PG_ITERS {
        let g = game.gradient(&x);
        let mut step = step0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = project(game, &(&x - &g * step));
            let c = game.social_cost(&cand);
            if c < cost - 1e-15 * cost.abs().max(1.0) {
                x = cand;
                cost = c;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (cost, x)
}

/// Moves an optimal parallel routing to one with an acyclic support graph at
/// the same social cost.
///
/// Each round takes a shortest cycle `r_1, t_1, r_2, ..., r_L, t_L` and shifts
/// an equal amount of every type `t_l` between its two cycle roads, so that
/// each road gains exactly what it loses. Road totals stay fixed, the cost
/// change is linear in the shift and vanishes at an optimum, and the smallest
/// cycle edge is driven to zero.
pub fn make_acyclic(network: &Network, routing: &Routing, tol: f64) -> Result<Routing, OptimalError> {
    if !network.is_parallel() {
        return Err(ModelError::NotParallel.into());
    }
    routing.check_feasible(network)?;
    let mut z = routing.clone();
    let start_cost = network.social_cost_unchecked(&z.edge_flows);
    for v in z.edge_flows.iter_mut() {
        if *v <= SUPPORT_TOL {
            *v = 0.0;
        }
    }
    let max_rounds = z.edge_flows.len() + 1;
    for _ in 0..max_rounds {
        let graph = SupportGraph::of(&z, SUPPORT_TOL);
        let Some(cycle) = graph.shortest_cycle() else {
            return Ok(z);
        };
        let len = cycle.len() / 2;
        let road = |l: usize| match cycle[(2 * l) % cycle.len()] {
            SupportNode::Road(i) => i,
            SupportNode::Type(_) => unreachable!("cycle starts at a road"),
        };
        let ty = |l: usize| match cycle[2 * l + 1] {
            SupportNode::Type(j) => j,
            SupportNode::Road(_) => unreachable!("types sit at odd positions"),
        };
        // Forward: t_l moves from r_{l+1} to r_l.
        let gains: Vec<(usize, usize)> = (0..len).map(|l| (road(l), ty(l))).collect();
        let losses: Vec<(usize, usize)> = (0..len).map(|l| (road(l + 1), ty(l))).collect();

        // d cost / d shift in the forward direction (road totals are fixed).
        let slope: f64 = (0..len)
            .map(|l| {
                let (ri, ti) = gains[l];
                let (ro, _) = losses[l];
                z.road_total(ri) * network.roads()[ri].slopes()[ti]
                    - z.road_total(ro) * network.roads()[ro].slopes()[ti]
            })
            .sum();

        let min_in = |edges: &[(usize, usize)]| {
            edges
                .iter()
                .map(|&e| (z.edge_flows[e], e))
                .fold((f64::INFINITY, (0, 0)), |a, b| if b.0 < a.0 { b } else { a })
        };
        let (fwd_min, _) = min_in(&losses);
        let (bwd_min, _) = min_in(&gains);
        let scale = 1.0 + start_cost.abs();
        let forward = if slope.abs() * fwd_min.max(bwd_min) <= tol * scale {
            // Stationary: push toward the smallest cycle edge.
            fwd_min <= bwd_min
        } else {
            slope < 0.0
        };
        let (from, to, step) = if forward { (&losses, &gains, fwd_min) } else { (&gains, &losses, bwd_min) };
        for &e in from.iter() {
            z.edge_flows[e] -= step;
            if z.edge_flows[e] <= SUPPORT_TOL {
                z.edge_flows[e] = 0.0;
            }
        }
        for &e in to.iter() {
            z.edge_flows[e] += step;
        }
    }
    Ok(z)
}
