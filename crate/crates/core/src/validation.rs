//! Randomized checks of the tolling guarantees and PoA bounds on one instance.

use crate::analysis::{anonymous_bound, lambda_bound, verify_aggregation, AnalysisError, BOUND_SLACK};
use crate::equilibrium::{enumerate_equilibria, worst_in_set};
use crate::model::{Network, Routing, TollSchedule, SUPPORT_TOL};
use crate::optimal::{make_acyclic, solve_optimal, SolveMode};
use crate::tolling::{anonymous_tolls, differentiated_tolls, epsilon_differentiated_tolls, EpsilonTollParams};

/// Relative tolerance for "cost equals the optimum" and "routing equals `z*`".
pub const MATCH_TOL: f64 = 1e-6;

/// Epsilon values exercised by [`validate_instance`].
pub const EPSILONS: [f64; 2] = [1e-1, 1e-3];

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCheck {
    pub k: Option<f64>,
    pub optimal_cost: f64,
    pub untolled_worst: f64,
    pub lambda_bound: Option<f64>,
    pub untolled_ok: bool,
    pub anonymous_worst: f64,
    pub anonymous_bound: Option<f64>,
    pub anonymous_ok: bool,
    /// Largest `|C(z) - C(z*)| / C(z*)` over differentiated-toll equilibria.
    pub differentiated_gap: f64,
    pub differentiated_ok: bool,
    /// `None` when some latency is not strictly increasing.
    pub epsilon_unique: Option<bool>,
    /// `None` for general networks.
    pub aggregation_ok: Option<bool>,
}

impl InstanceCheck {
    pub fn pass(&self) -> bool {
        self.untolled_ok
            && self.anonymous_ok
            && self.differentiated_ok
            && self.epsilon_unique != Some(false)
            && self.aggregation_ok != Some(false)
    }
}

fn within_bound(worst: f64, bound: Option<f64>, opt: f64) -> bool {
    bound.is_none_or(|b| worst <= b * opt + BOUND_SLACK * opt.max(1.0))
}

/// Runs every applicable check on `network`, using `tol` for equilibrium
/// enumeration.
pub fn validate_instance(network: &Network, tol: f64) -> Result<InstanceCheck, AnalysisError> {
    let opt = solve_optimal(network, SolveMode::Exact)?;
    let c_star = opt.cost;
    let k = network.degree_of_asymmetry().finite();

    let untolled = TollSchedule::zeros(network);
    let set = enumerate_equilibria(network, &untolled, tol)?;
    let untolled_worst = worst_in_set(network, &untolled, &set, tol).cost;
    let lambda = k.map(lambda_bound).transpose()?;
    let aggregation_ok = if network.is_parallel() {
        let mut ok = true;
        for eq in &set.equilibria {
            ok &= verify_aggregation(network, &eq.routing)?.all_hold();
        }
        Some(ok)
    } else {
        None
    };

    let anon = anonymous_tolls(network, &opt.routing)?;
    let anon_set = enumerate_equilibria(network, &anon, tol)?;
    let anonymous_worst = worst_in_set(network, &anon, &anon_set, tol).cost;
    let anon_bound = k.map(anonymous_bound).transpose()?;

    let diff = differentiated_tolls(network, &opt.routing)?;
    let diff_set = enumerate_equilibria(network, &diff, tol)?;
    let scale = c_star.abs().max(f64::MIN_POSITIVE);
    let differentiated_gap = diff_set.equilibria.iter().map(|e| (e.cost - c_star).abs() / scale).fold(0.0, f64::max);

    let epsilon_unique = if network.is_parallel() && network.is_strictly_increasing() {
        let z_star = make_acyclic(network, &opt.routing, SUPPORT_TOL)?;
        let mut ok = true;
        for eps in EPSILONS {
            let params = EpsilonTollParams { epsilon: Some(eps), ..Default::default() };
            let tolls = epsilon_differentiated_tolls(network, &z_star, params)?;
            ok &= is_unique(&enumerate_equilibria(network, &tolls, tol)?.equilibria, &z_star, network);
        }
        Some(ok)
    } else {
        None
    };

    Ok(InstanceCheck {
        k,
        optimal_cost: c_star,
        untolled_worst,
        lambda_bound: lambda,
        untolled_ok: within_bound(untolled_worst, lambda, c_star),
        anonymous_worst,
        anonymous_bound: anon_bound,
        anonymous_ok: within_bound(anonymous_worst, anon_bound, c_star),
        differentiated_gap,
        differentiated_ok: differentiated_gap <= MATCH_TOL && !diff_set.equilibria.is_empty(),
        epsilon_unique,
        aggregation_ok,
    })
}

fn is_unique(eqs: &[crate::equilibrium::Equilibrium], z_star: &Routing, network: &Network) -> bool {
    eqs.len() == 1 && eqs[0].routing.max_abs_diff(z_star) <= MATCH_TOL * (1.0 + network.total_demand())
}
