//! Price-of-Anarchy bounds, the single-commodity aggregation of an
//! equilibrium, sampled checks of the bound constants, and diagnostics for
//! the epsilon-toll uniqueness argument.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::equilibrium::{
    wardrop_check, worst_equilibrium, EquilibriumError, WardropOutcome, WardropViolation, EQ_TOL,
};
use crate::model::{Asymmetry, ModelError, Network, Routing, SupportGraph, TollSchedule, SUPPORT_TOL};
use crate::optimal::{make_acyclic, solve_optimal, OptimalError, SolveMode};
use crate::rng::SeededRng;
use crate::tolling::{standard_cost, TollScheme, TollingError};

/// Absolute slack on bound comparisons, after scaling by the optimal cost.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("degree of asymmetry must be finite and at least 1, got {0}")]
    InvalidK(f64),
    #[error("routing is not an untolled equilibrium: type {} on strategy {} exceeds the cheapest by {}", .0.type_idx, .0.strategy, .0.excess)]
    NotEquilibrium(WardropViolation),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optimal(#[from] OptimalError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Tolling(#[from] TollingError),
}

fn check_k(k: f64) -> Result<(), AnalysisError> {
    if k.is_finite() && k >= 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidK(k))
    }
}

/// Untolled PoA bound: `4/(4-k)` for `k <= 3`, `4k/3` above.
pub fn lambda_bound(k: f64) -> Result<f64, AnalysisError> {
    check_k(k)?;
    Ok(if k <= 3.0 { 4.0 / (4.0 - k) } else { 4.0 * k / 3.0 })
}

/// PoA bound under anonymous tolls, `4k^2/(3k+1)`.
pub fn anonymous_bound(k: f64) -> Result<f64, AnalysisError> {
    check_k(k)?;
    Ok(4.0 * k * k / (3.0 * k + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundCurves {
    pub untolled_a: f64,
    pub untolled_b: f64,
    /// Worst equilibrium cost of the two-road example under the best
    /// unrestricted anonymous toll.
    pub anonymous_unrestricted_cost: f64,
    /// The same cost over that example's optimal cost of 2.
    pub anonymous_unrestricted_ratio: f64,
}

pub fn lower_bound_curves(k: f64) -> Result<LowerBoundCurves, AnalysisError> {
    check_k(k)?;
    let cost = (7.0 * k + 3.0) / 4.0 - 1.0 / (k + 1.0);
    Ok(LowerBoundCurves {
        untolled_a: k,
        untolled_b: 1.0 + k / (2.0 * k.sqrt() + 1.0),
        anonymous_unrestricted_cost: cost,
        anonymous_unrestricted_ratio: cost / 2.0,
    })
}

/// Road latency seen by aggregated flow: the first `zhat^1` units congest
/// like type 1, the next `zhat^2` like type 2, and so on; anything beyond the
/// last breakpoint congests like the last type.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedLatency {
    pub road: usize,
    /// Cumulative sums `v^1 .. v^{m-1}`.
    pub breakpoints: Vec<f64>,
    pub segment_slopes: Vec<f64>,
    pub base: f64,
}

impl AggregatedLatency {
    fn segment_start(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.breakpoints[j - 1]
        }
    }

    fn segment_end(&self, j: usize) -> f64 {
        self.breakpoints.get(j).copied().unwrap_or(f64::INFINITY)
    }

    pub fn eval(&self, f: f64) -> f64 {
        let mut out = self.base;
        for (j, &a) in self.segment_slopes.iter().enumerate() {
            let (lo, hi) = (self.segment_start(j), self.segment_end(j));
            out += a * (f.min(hi) - lo).max(0.0);
        }
        out
    }

    /// `l(f) = offset + slope * f` on segment `j`.
    fn segment_line(&self, j: usize) -> (f64, f64) {
        let lo = self.segment_start(j);
        let slope = self.segment_slopes[j];
        (self.eval(lo) - slope * lo, slope)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub roads: Vec<AggregatedLatency>,
    /// Total flow per road in the aggregated routing.
    pub f_hat: Vec<f64>,
}

impl Aggregation {
    /// `L(f) = sum_i f_i l_i(f_i)`.
    pub fn total_cost(&self, f: &[f64]) -> f64 {
        self.roads.iter().zip(f).map(|(r, &x)| x * r.eval(x)).sum()
    }

    pub fn latencies(&self, f: &[f64]) -> Vec<f64> {
        self.roads.iter().zip(f).map(|(r, &x)| r.eval(x)).collect()
    }
}

pub fn aggregate(network: &Network, z_hat: &Routing) -> Result<Aggregation, AnalysisError> {
    z_hat.check_feasible(network)?;
    let m = network.num_types();
    let roads = network
        .roads()
        .iter()
        .enumerate()
        .map(|(i, lat)| {
            let mut acc = 0.0;
            let breakpoints = (0..m.saturating_sub(1))
                .map(|j| {
                    acc += z_hat.edge_flows[(i, j)];
                    acc
                })
                .collect();
            AggregatedLatency { road: i, breakpoints, segment_slopes: lat.slopes().to_vec(), base: lat.intercept() }
        })
        .collect();
    let f_hat = (0..network.num_roads()).map(|i| z_hat.road_total(i)).collect();
    Ok(Aggregation { roads, f_hat })
}

/// Minimizes `L` over `{f >= 0, sum f = demand}`.
///
/// Each `f_i l_i(f_i)` is a convex quadratic on every segment of `l_i`, so
/// fixing one segment per road leaves a separable convex problem solved
/// exactly by scanning the breakpoints of the marginal costs. The global
/// minimum is the best over all segment choices.
pub fn minimize_aggregate(agg: &Aggregation, demand: f64) -> (Vec<f64>, f64) {
    let n = agg.roads.len();
    let live: Vec<Vec<usize>> = agg
        .roads
        .iter()
        .map(|r| (0..r.segment_slopes.len()).filter(|&j| r.segment_end(j) > r.segment_start(j)).collect())
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut choice = vec![0usize; n];
    loop {
        let pieces: Vec<Piece> = (0..n)
            .map(|i| {
                let r = &agg.roads[i];
                let j = live[i][choice[i]];
                let (offset, slope) = r.segment_line(j);
                Piece { lo: r.segment_start(j), hi: r.segment_end(j), offset, slope }
            })
            .collect();
        if let Some(f) = water_fill(&pieces, demand) {
            let cost = agg.total_cost(&f);
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                best = Some((f, cost));
            }
        }
        // Odometer over segment choices.
        let mut i = 0;
        while i < n {
            choice[i] += 1;
            if choice[i] < live[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    best.unwrap_or_else(|| (vec![0.0; n], 0.0))
}

struct Piece {
    lo: f64,
    hi: f64,
    offset: f64,
    slope: f64,
}

impl Piece {
    fn marginal(&self, f: f64) -> f64 {
        self.offset + 2.0 * self.slope * f
    }

    /// Flow at marginal cost `lambda`; flat pieces sit at `lo` (or `hi` when
    /// `upper` is set) exactly at their level.
    fn flow_at(&self, lambda: f64, upper: bool) -> f64 {
        if self.slope == 0.0 {
            return if lambda > self.offset || (upper && lambda == self.offset) { self.hi } else { self.lo };
        }
        ((lambda - self.offset) / (2.0 * self.slope)).clamp(self.lo, self.hi)
    }
}

fn water_fill(pieces: &[Piece], demand: f64) -> Option<Vec<f64>> {
    let lo_sum: f64 = pieces.iter().map(|p| p.lo).sum();
    let hi_sum: f64 = pieces.iter().map(|p| p.hi).sum();
    if lo_sum > demand || hi_sum < demand {
        return None;
    }
    let mut levels: Vec<f64> =
        pieces.iter().flat_map(|p| [p.marginal(p.lo), p.marginal(p.hi)]).filter(|x| x.is_finite()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let total = |lambda: f64, upper: bool| -> f64 { pieces.iter().map(|p| p.flow_at(lambda, upper)).sum() };

    let mut prev: Option<f64> = None;
    for &level in &levels {
        let below = total(level, false);
        let above = total(level, true);
        if below >= demand {
            // Crossing lies strictly between the previous level and this one,
            // where every piece is linear in lambda.
            let start = prev.map_or(level, |p| p);
            let s0 = prev.map_or(lo_sum, |p| total(p, true));
            let lambda = if below > s0 { start + (level - start) * (demand - s0) / (below - s0) } else { level };
            return Some(pieces.iter().map(|p| p.flow_at(lambda, false)).collect());
        }
        if above >= demand {
            // Flat pieces at this level absorb the remainder in road order.
            let mut rest = demand - below;
            return Some(
                pieces
                    .iter()
                    .map(|p| {
                        let base = p.flow_at(level, false);
                        if p.slope == 0.0 && p.offset == level {
                            let add = rest.min(p.hi - base);
                            rest -= add;
                            base + add
                        } else {
                            base
                        }
                    })
                    .collect(),
            );
        }
        prev = Some(level);
    }
    // Beyond the last level only unbounded sloped pieces still grow.
    let start = prev?;
    let s0 = total(start, true);
    let rate: f64 = pieces.iter().filter(|p| p.slope > 0.0 && p.hi.is_infinite()).map(|p| 1.0 / (2.0 * p.slope)).sum();
    if rate == 0.0 {
        return None;
    }
    let lambda = start + (demand - s0) / rate;
    Some(pieces.iter().map(|p| p.flow_at(lambda, false)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationReport {
    pub social_cost: f64,
    pub l_hat: f64,
    pub cost_matches: bool,
    pub f_hat_is_equilibrium: bool,
    pub f_star: Vec<f64>,
    pub l_star: f64,
    /// `L(f_hat) <= 4/3 L(f*)`.
    pub agg_poa_holds: bool,
    pub optimal_cost: f64,
    /// `L` at the optimal road totals, an upper bound on `L(f*)`.
    pub l_at_optimal_totals: f64,
    pub k: Asymmetry,
    /// `L(f*) <= L(w) <= k C(z*)`; `None` when `k` is unbounded.
    pub opt_bound_holds: Option<bool>,
}

impl AggregationReport {
    pub fn all_hold(&self) -> bool {
        self.cost_matches && self.f_hat_is_equilibrium && self.agg_poa_holds && self.opt_bound_holds != Some(false)
    }
}

/// Checks the aggregation claims at an untolled equilibrium `z_hat` of a
/// parallel network.
pub fn verify_aggregation(network: &Network, z_hat: &Routing) -> Result<AggregationReport, AnalysisError> {
    if !network.is_parallel() {
        return Err(ModelError::NotParallel.into());
    }
    if let WardropOutcome::Violation(v) = wardrop_check(network, &TollSchedule::zeros(network), z_hat, EQ_TOL)? {
        return Err(AnalysisError::NotEquilibrium(v));
    }
    let agg = aggregate(network, z_hat)?;
    let social_cost = network.social_cost(z_hat)?;
    let l_hat = agg.total_cost(&agg.f_hat);
    let claim_tol = 1e-9 * (1.0 + social_cost.abs());
    let cost_matches = (l_hat - social_cost).abs() <= claim_tol;

    let lat = agg.latencies(&agg.f_hat);
    let min_lat = lat.iter().copied().fold(f64::INFINITY, f64::min);
    let f_hat_is_equilibrium =
        agg.f_hat.iter().zip(&lat).all(|(&f, &l)| f <= SUPPORT_TOL || l - min_lat <= EQ_TOL.max(claim_tol));

    let (f_star, l_star) = minimize_aggregate(&agg, network.total_demand());
    let optimal = solve_optimal(network, SolveMode::Exact)?;
    let slack = BOUND_SLACK * optimal.cost.max(1.0);
    let agg_poa_holds = l_hat <= 4.0 / 3.0 * l_star + slack;
    let totals: Vec<f64> = (0..network.num_roads()).map(|i| optimal.routing.road_total(i)).collect();
    let l_at_optimal_totals = agg.total_cost(&totals);
    let k = network.degree_of_asymmetry();
    let opt_bound_holds =
        k.finite().map(|k| l_star <= l_at_optimal_totals + slack && l_at_optimal_totals <= k * optimal.cost + slack);
    Ok(AggregationReport {
        social_cost,
        l_hat,
        cost_matches,
        f_hat_is_equilibrium,
        f_star,
        l_star,
        agg_poa_holds,
        optimal_cost: optimal.cost,
        l_at_optimal_totals,
        k,
        opt_bound_holds,
    })
}

/// One road's contribution to the PoA constant over the untolled class:
/// `(sum z)(sum a(zhat - z)) / ((sum zhat)(b + a . zhat))`.
pub fn beta_ck_ratio(a: &[f64], b: f64, z_hat: &[f64], z: &[f64]) -> f64 {
    let zs: f64 = z.iter().sum();
    let zh: f64 = z_hat.iter().sum();
    let num = zs * a.iter().zip(z_hat).zip(z).map(|((a, h), z)| a * (h - z)).sum::<f64>();
    let den = zh * (b + dot(a, z_hat));
    ratio(num, den)
}

/// `(l(f_hat) - l(f)) f / (l(f_hat) f_hat)` for the aggregated latency of
/// one road, with segments in the given order.
pub fn beta_l_ratio(a: &[f64], b: f64, z_hat: &[f64], f: f64) -> f64 {
    let (l, f_hat) = single_road(a, b, z_hat);
    ratio((l.eval(f_hat) - l.eval(f)) * f, l.eval(f_hat) * f_hat)
}

/// The tolled variant with the anonymous toll `min a * f` charged on
/// aggregated flow `f`.
pub fn gamma_ratio(a: &[f64], b: f64, z_hat: &[f64], f: f64) -> f64 {
    let (l, f_hat) = single_road(a, b, z_hat);
    let a_min = a.iter().copied().fold(f64::INFINITY, f64::min);
    let num = (l.eval(f_hat) - l.eval(f)) * f - a_min * f * (f_hat - f);
    ratio(num, l.eval(f_hat) * f_hat)
}

fn single_road(a: &[f64], b: f64, z_hat: &[f64]) -> (AggregatedLatency, f64) {
    let mut acc = 0.0;
    let breakpoints = z_hat[..z_hat.len().saturating_sub(1)]
        .iter()
        .map(|z| {
            acc += z;
            acc
        })
        .collect();
    let l = AggregatedLatency { road: 0, breakpoints, segment_slopes: a.to_vec(), base: b };
    (l, z_hat.iter().sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerMaxima {
    pub max_beta_ck: f64,
    pub max_beta_l: f64,
    pub max_gamma_ck: f64,
}

impl SamplerMaxima {
    fn merge(self, o: Self) -> Self {
        Self {
            max_beta_ck: self.max_beta_ck.max(o.max_beta_ck),
            max_beta_l: self.max_beta_l.max(o.max_beta_l),
            max_gamma_ck: self.max_gamma_ck.max(o.max_gamma_ck),
        }
    }
}

/// Analytic suprema: `k/4`, `1/4`, `(k-1)/(4k)`.
pub fn sampler_bounds(k: f64) -> SamplerMaxima {
    SamplerMaxima { max_beta_ck: k / 4.0, max_beta_l: 0.25, max_gamma_ck: (k - 1.0) / (4.0 * k) }
}

const SHARD: usize = 4096;

/// Largest sampled value of each ratio over random single-road instances with
/// slope ratios at most `k`, including the analytic maximizers.
///
/// The aggregated ratios list slopes in nonincreasing order. Samples are
/// drawn in shards of 4096, shard `s` from `SeededRng::substream(seed, s)`,
/// so the result does not depend on the thread count.
pub fn beta_gamma_sampler(k: f64, samples: usize, seed: u64) -> Result<SamplerMaxima, AnalysisError> {
    check_k(k)?;
    let start = SamplerMaxima {
        max_beta_ck: beta_ck_ratio(&[k, 1.0], 0.0, &[1.0, 0.0], &[0.0, k / 2.0]),
        max_beta_l: beta_l_ratio(&[1.0], 0.0, &[1.0], 0.5),
        max_gamma_ck: gamma_ratio(&[k, 1.0], 0.0, &[1.0, 0.0], 0.5),
    };
    let shards = samples.div_ceil(SHARD);
    let found = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = SeededRng::substream(seed, s as u64);
            let count = SHARD.min(samples - s * SHARD);
            (0..count).fold(start, |acc, _| acc.merge(draw(&mut rng, k)))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(start, SamplerMaxima::merge);
    Ok(found)
}

fn draw(rng: &mut SeededRng, k: f64) -> SamplerMaxima {
    let m = rng.int_in(1, 3);
    let a_min = rng.uniform(0.1, 2.0);
    let mut a: Vec<f64> = (0..m).map(|_| a_min * rng.uniform(1.0, k)).collect();
    a[rng.int_in(0, m - 1)] = a_min;
    let b = if rng.unit() < 0.25 { 0.0 } else { rng.uniform(0.0, 1.0) };
    let z_hat: Vec<f64> = (0..m).map(|_| if rng.unit() < 0.2 { 0.0 } else { rng.uniform(0.0, 2.0) }).collect();
    let total: f64 = z_hat.iter().sum();
    let z: Vec<f64> = (0..m).map(|_| rng.uniform(0.0, k.max(1.0) * 1.5)).collect();
    let f = rng.uniform(0.0, 2.0 * total.max(1e-3));
    let mut sorted = a.clone();
    sorted.sort_by(|x, y| y.total_cmp(x));
    SamplerMaxima {
        max_beta_ck: beta_ck_ratio(&a, b, &z_hat, &z),
        max_beta_l: beta_l_ratio(&sorted, b, &z_hat, f),
        max_gamma_ck: gamma_ratio(&sorted, b, &z_hat, f),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaFlags {
    /// Every road in `I1` has standard cost at least `mu`.
    pub greater_flow: bool,
    /// Every road in `I2` has standard cost at most `mu`.
    pub lesser_flow: bool,
    /// Roads with new types sit at the minimum standard cost, their types'
    /// original roads at the minimum plus epsilon. Only evaluated when the
    /// routing is an equilibrium under the schedule.
    pub relative_costs: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionDiagnostics {
    pub used_roads: BTreeSet<usize>,
    pub i1: BTreeSet<usize>,
    pub i2: BTreeSet<usize>,
    pub i3: BTreeSet<usize>,
    pub standard_costs: Vec<f64>,
    pub min_standard_cost: f64,
    pub max_standard_cost: f64,
    /// `I1` and `I2` overlap: the case the uniqueness argument rules out.
    pub contradiction: bool,
    pub lemma_flags: LemmaFlags,
    /// Applications of the closure map until it stopped growing.
    pub closure_steps: usize,
}

/// Smallest superset of `a` closed under sharing a type on the optimal
/// support. Returns the set and the number of growing applications.
pub fn phi_closure(optimal: &SupportGraph, a: &BTreeSet<usize>) -> (BTreeSet<usize>, usize) {
    let mut set = a.clone();
    let mut steps = 0;
    loop {
        let next: BTreeSet<usize> = set
            .iter()
            .flat_map(|&i| optimal.types_on_road(i))
            .flat_map(|j| optimal.roads_of_type(j))
            .chain(set.iter().copied())
            .collect();
        if next == set {
            return (set, steps);
        }
        set = next;
        steps += 1;
    }
}

pub fn partition_roads(
    network: &Network,
    tolls: &TollSchedule,
    z_hat: &Routing,
) -> Result<PartitionDiagnostics, AnalysisError> {
    let meta = tolls.epsilon_meta().ok_or(TollingError::MissingMetadata)?;
    z_hat.check_feasible(network)?;
    let opt = SupportGraph::of(&meta.optimal, SUPPORT_TOL);
    let now = SupportGraph::of(z_hat, SUPPORT_TOL);
    let used = opt.used_roads();
    let new_edges: Vec<(usize, usize)> = now.edges().iter().copied().filter(|&(i, j)| !opt.contains(i, j)).collect();
    let seed1: BTreeSet<usize> = new_edges.iter().map(|&(i, _)| i).filter(|i| used.contains(i)).collect();
    let seed2: BTreeSet<usize> =
        new_edges.iter().flat_map(|&(_, j)| opt.roads_of_type(j)).filter(|i| used.contains(i)).collect();
    let (i1, s1) = phi_closure(&opt, &seed1);
    let (i2, s2) = phi_closure(&opt, &seed2);
    let i3 = used.iter().copied().filter(|i| !i1.contains(i) && !i2.contains(i)).collect();

    let standard_costs =
        (0..network.num_roads()).map(|i| standard_cost(network, tolls, z_hat, i)).collect::<Result<Vec<_>, _>>()?;
    let over_used = || used.iter().map(|&i| standard_costs[i]);
    let min_standard_cost = over_used().fold(f64::INFINITY, f64::min);
    let max_standard_cost = over_used().fold(f64::NEG_INFINITY, f64::max);
    let tol = EQ_TOL * (1.0 + meta.mu.abs());
    let greater_flow = i1.iter().all(|&i| standard_costs[i] >= meta.mu - tol);
    let lesser_flow = i2.iter().all(|&i| standard_costs[i] <= meta.mu + tol);
    let relative_costs = if new_edges.is_empty() {
        None
    } else {
        match wardrop_check(network, tolls, z_hat, EQ_TOL)? {
            WardropOutcome::Violation(_) => None,
            WardropOutcome::Equilibrium(_) => {
                let lo = min_standard_cost;
                let eps = meta.epsilon;
                let ok = new_edges.iter().all(|&(i, j)| {
                    (standard_costs[i] - lo).abs() <= tol
                        && opt.roads_of_type(j).iter().all(|&r| (standard_costs[r] - lo - eps).abs() <= tol)
                }) && (max_standard_cost - lo - eps).abs() <= tol;
                Some(ok)
            }
        }
    };
    Ok(PartitionDiagnostics {
        contradiction: !i1.is_disjoint(&i2),
        used_roads: used,
        i1,
        i2,
        i3,
        standard_costs,
        min_standard_cost,
        max_standard_cost,
        lemma_flags: LemmaFlags { greater_flow, lesser_flow, relative_costs },
        closure_steps: s1.max(s2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundName {
    LambdaUntolled,
    Anonymous,
    None,
}

impl BoundName {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundName::LambdaUntolled => "lambda_untolled",
            BoundName::Anonymous => "anonymous",
            BoundName::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoAReport {
    pub scheme: &'static str,
    pub optimal_cost: f64,
    pub worst_eq_cost: f64,
    pub empirical_poa: f64,
    pub k: Asymmetry,
    pub bound_value: Option<f64>,
    pub bound_name: BoundName,
    pub satisfied: bool,
    pub tolls: TollSchedule,
    pub optimal: Routing,
    pub worst: Routing,
}

/// Exact optimum, tolls from `scheme`, and the worst equilibrium under them.
pub fn poa_report(network: &Network, scheme: TollScheme) -> Result<PoAReport, AnalysisError> {
    let opt = solve_optimal(network, SolveMode::Exact)?;
    let z_star = match scheme {
        TollScheme::Epsilon(_) => make_acyclic(network, &opt.routing, SUPPORT_TOL)?,
        _ => opt.routing.clone(),
    };
    let tolls = scheme.build(network, &z_star)?;
    let worst = worst_equilibrium(network, &tolls, EQ_TOL)?;
    let k = network.degree_of_asymmetry();
    let bound_name = match (scheme, k) {
        (_, Asymmetry::Unbounded) => BoundName::None,
        (TollScheme::Untolled, _) => BoundName::LambdaUntolled,
        (TollScheme::Anonymous, _) => BoundName::Anonymous,
        _ => BoundName::None,
    };
    let bound_value = match (bound_name, k.finite()) {
        (BoundName::LambdaUntolled, Some(k)) => Some(lambda_bound(k)?),
        (BoundName::Anonymous, Some(k)) => Some(anonymous_bound(k)?),
        _ => None,
    };
    let empirical_poa = if opt.cost > 0.0 { worst.cost / opt.cost } else { 1.0 };
    let satisfied = bound_value.is_none_or(|b| worst.cost <= b * opt.cost + BOUND_SLACK * opt.cost.max(1.0));
    Ok(PoAReport {
        scheme: scheme.name(),
        optimal_cost: opt.cost,
        worst_eq_cost: worst.cost,
        empirical_poa,
        k,
        bound_value,
        bound_name,
        satisfied,
        tolls,
        optimal: z_star,
        worst: worst.routing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_a, example_b};
    use crate::model::AffineLatency;
    use crate::tolling::{epsilon_differentiated_tolls, EpsilonTollParams};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn two_roads(slopes: [[f64; 2]; 2], b: [f64; 2], d: [f64; 2]) -> Network {
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

    #[test]
    fn bound_values() {
        assert!(close(lambda_bound(1.0).unwrap(), 4.0 / 3.0));
        assert!(close(lambda_bound(3.0).unwrap(), 4.0));
        assert!(close(lambda_bound(4.0).unwrap(), 16.0 / 3.0));
        assert_eq!(anonymous_bound(1.0).unwrap(), 1.0);
        assert!(close(anonymous_bound(2.0).unwrap(), 16.0 / 7.0));
        assert!(close(anonymous_bound(4.0).unwrap(), 64.0 / 13.0));
        assert_eq!(lambda_bound(0.5), Err(AnalysisError::InvalidK(0.5)));
        assert!(anonymous_bound(f64::INFINITY).is_err());
    }

    #[test]
    fn curve_values() {
        let c = lower_bound_curves(1.0).unwrap();
        assert_eq!(c.untolled_a, 1.0);
        assert!(close(c.untolled_b, 4.0 / 3.0));
        assert!(close(c.anonymous_unrestricted_cost, 2.0));
        assert!(close(c.anonymous_unrestricted_ratio, 1.0));
        assert!(close(lower_bound_curves(4.0).unwrap().untolled_b, 9.0 / 5.0));
    }

    #[test]
    fn aggregation_single_road() {
        let n = Network::parallel(
            vec!["1".into(), "2".into()],
            vec![AffineLatency::new(vec![2.0, 1.0], 1.0).unwrap()],
            vec![1.0, 1.0],
        )
        .unwrap();
        let z = Routing::from_rows(&[vec![1.0, 1.0]]);
        let agg = aggregate(&n, &z).unwrap();
        assert_eq!(agg.f_hat, vec![2.0]);
        assert_eq!(agg.roads[0].eval(2.0), 4.0);
        assert_eq!(agg.total_cost(&agg.f_hat), 8.0);
        assert_eq!(n.social_cost(&z).unwrap(), 8.0);
    }

    #[test]
    fn aggregation_of_empty_flow() {
        let n = Network::parallel(
            vec!["1".into(), "2".into()],
            vec![AffineLatency::new(vec![2.0, 3.0], 0.5).unwrap()],
            vec![0.0, 0.0],
        )
        .unwrap();
        let agg = aggregate(&n, &Routing::zeros(&n)).unwrap();
        for f in [0.0, 0.5, 2.0] {
            assert!(close(agg.roads[0].eval(f), 0.5 + 3.0 * f));
        }
    }

    #[test]
    fn example_a_aggregation() {
        let n = example_a(2.0);
        let rev = Routing::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let rep = verify_aggregation(&n, &rev).unwrap();
        assert!(close(rep.l_hat, 4.0));
        assert!(rep.cost_matches && rep.f_hat_is_equilibrium);
        assert!((rep.l_star - 47.0 / 12.0).abs() < 1e-9);
        assert!(rep.l_star >= 3.0);
        assert!(rep.all_hold());
    }

    #[test]
    fn aggregation_rejects_non_equilibrium() {
        let n = example_a(2.0);
        let z = Routing::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(verify_aggregation(&n, &z), Err(AnalysisError::NotEquilibrium(_))));
    }

    #[test]
    fn symmetric_instance_l_star_matches() {
        let n = two_roads([[1.0, 1.0], [2.0, 2.0]], [0.0, 0.0], [1.0, 2.0]);
        let z = Routing::from_rows(&[vec![2.0 / 3.0, 4.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]]);
        let rep = verify_aggregation(&n, &z).unwrap();
        assert!((rep.l_hat - rep.l_star).abs() < 1e-9);
        assert!(rep.all_hold());
    }

    #[test]
    fn example_b_worst_aggregation() {
        let n = example_b(4.0);
        let w = worst_equilibrium(&n, &TollSchedule::zeros(&n), EQ_TOL).unwrap();
        assert!(verify_aggregation(&n, &w.routing).unwrap().all_hold());
    }

    #[test]
    fn minimizer_matches_grid() {
        let n = example_a(3.0);
        let rev = Routing::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let agg = aggregate(&n, &rev).unwrap();
        let (_, l_star) = minimize_aggregate(&agg, 2.0);
        let grid = (0..=20_000)
            .map(|s| {
                let f = 2.0 * s as f64 / 20_000.0;
                agg.total_cost(&[f, 2.0 - f])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(l_star <= grid + 1e-12 && grid - l_star < 1e-6);
    }

    #[test]
    fn sampler_respects_bounds() {
        for k in [1.0, 2.0] {
            let got = beta_gamma_sampler(k, 20_000, 3).unwrap();
            let bound = sampler_bounds(k);
            assert!(got.max_beta_ck <= bound.max_beta_ck + 1e-9);
            assert!(got.max_beta_l <= bound.max_beta_l + 1e-9);
            assert!(got.max_gamma_ck <= bound.max_gamma_ck + 1e-9);
        }
        assert_eq!(beta_gamma_sampler(2.0, 5000, 9), beta_gamma_sampler(2.0, 5000, 9));
        assert_eq!(beta_ck_ratio(&[1.5], 0.3, &[0.7], &[0.7]), 0.0);
    }

    fn deviation_fixture() -> (Network, TollSchedule) {
        let n = Network::parallel(
            vec!["1".into(), "2".into()],
            vec![
                AffineLatency::new(vec![1.0, 1.0], 0.0).unwrap(),
                AffineLatency::new(vec![1.0, 1.0], 0.0).unwrap(),
                AffineLatency::new(vec![1.0, 1.0], 3.0).unwrap(),
            ],
            vec![1.0, 1.0],
        )
        .unwrap();
        let z_star = Routing::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]);
        let t = epsilon_differentiated_tolls(&n, &z_star, EpsilonTollParams::new(1.0, 0.01)).unwrap();
        (n, t)
    }

    #[test]
    fn partition_at_optimum() {
        let (n, t) = deviation_fixture();
        let z_star = t.epsilon_meta().unwrap().optimal.clone();
        let d = partition_roads(&n, &t, &z_star).unwrap();
        assert!(d.i1.is_empty() && d.i2.is_empty());
        assert_eq!(d.i3, BTreeSet::from([0, 1]));
        assert!(close(d.standard_costs[0], 1.0) && close(d.standard_costs[1], 1.0));
        assert_eq!(d.lemma_flags.relative_costs, None);
    }

    #[test]
    fn partition_of_deviation() {
        let (n, t) = deviation_fixture();
        let z = Routing::from_rows(&[vec![0.75, 0.0], vec![0.25, 1.0], vec![0.0, 0.0]]);
        let d = partition_roads(&n, &t, &z).unwrap();
        assert_eq!(d.i1, BTreeSet::from([1]));
        assert_eq!(d.i2, BTreeSet::from([0]));
        assert!(!d.contradiction);
        assert!(d.lemma_flags.greater_flow && d.lemma_flags.lesser_flow);
        // Not an equilibrium under the schedule, so the equilibrium-only
        // relation is not evaluated.
        assert_eq!(d.lemma_flags.relative_costs, None);
        assert!(partition_roads(&n, &TollSchedule::zeros(&n), &z).is_err());
    }

    #[test]
    fn closure_reaches_fixed_point() {
        let g = SupportGraph::from_edges(4, 3, [(0, 0), (1, 0), (1, 1), (2, 1), (3, 2)]);
        let (set, steps) = phi_closure(&g, &BTreeSet::from([0]));
        assert_eq!(set, BTreeSet::from([0, 1, 2]));
        assert!(steps <= 4);
        let (again, more) = phi_closure(&g, &set);
        assert_eq!(again, set);
        assert_eq!(more, 0);
    }

    #[test]
    fn poa_reports() {
        let r = poa_report(&example_a(2.0), TollScheme::Untolled).unwrap();
        assert!((r.empirical_poa - 2.0).abs() < 1e-9);
        assert_eq!(r.bound_name, BoundName::LambdaUntolled);
        assert!(close(r.bound_value.unwrap(), 2.0));
        assert!(r.satisfied);
        let r = poa_report(&example_a(2.0), TollScheme::Anonymous).unwrap();
        assert!((r.empirical_poa - 2.0).abs() < 1e-9);
        assert!(r.satisfied && r.bound_name == BoundName::Anonymous);
        let r = poa_report(&example_b(4.0), TollScheme::Anonymous).unwrap();
        assert!((r.worst_eq_cost - 4.0 / 3.0).abs() < 1e-9);
        assert!((r.empirical_poa - 1.6).abs() < 1e-9);
        assert!(r.satisfied);
    }
}
