//! Toll schedules built from an optimal routing.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{EpsilonMeta, ModelError, Network, Routing, SupportGraph, TollSchedule, SUPPORT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TollingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the optimal routing's support graph has a cycle; run make_acyclic first")]
    CyclicSupport,
    #[error("mu = {mu} is below the largest used-road latency {required}; tolls would be negative")]
    MuTooSmall { mu: f64, required: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("toll schedule carries no epsilon metadata")]
    MissingMetadata,
    #[error("road index {road} out of range (network has {num_roads} roads)")]
    RoadOutOfRange { road: usize, num_roads: usize },
}

/// `tau^j_i = a^j_i * (total flow on road i in z)`.
///
/// Each type's row of the cost Jacobian on road `i` is the slope vector
/// `a_i`, so the type-`j` externality at `z` is `a^j_i` times the road total.
pub fn differentiated_tolls(network: &Network, z_star: &Routing) -> Result<TollSchedule, TollingError> {
    z_star.check_feasible(network)?;
    Ok(per_type_externality(network, z_star))
}

/// Flow-dependent marginal-cost tolls at an arbitrary feasible `z`.
pub fn marginal_cost_tolls(network: &Network, z: &Routing) -> Result<TollSchedule, TollingError> {
    z.check_feasible(network)?;
    Ok(per_type_externality(network, z))
}

fn per_type_externality(network: &Network, z: &Routing) -> TollSchedule {
    let roads = network.roads();
    let tolls =
        DMatrix::from_fn(network.num_roads(), network.num_types(), |i, j| roads[i].slopes()[j] * z.road_total(i));
    TollSchedule::new(tolls).expect("slopes and flows are nonnegative")
}

/// Every type on road `i` pays `min_j a^j_i` times the optimal road total.
pub fn anonymous_tolls(network: &Network, z_star: &Routing) -> Result<TollSchedule, TollingError> {
    z_star.check_feasible(network)?;
    let roads = network.roads();
    let tolls =
        DMatrix::from_fn(network.num_roads(), network.num_types(), |i, _| roads[i].min_slope() * z_star.road_total(i));
    Ok(TollSchedule::new(tolls).expect("slopes and flows are nonnegative"))
}

/// Parameters of the epsilon-differentiated scheme. `None` selects the default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpsilonTollParams {
    /// Defaults to the largest latency among roads used in `z*`.
    pub mu: Option<f64>,
    /// Defaults to `1e-3 * mu`.
    pub epsilon: Option<f64>,
    /// Defaults to `mu + max_i latency(all demand on i) + 1`.
    pub big_p: Option<f64>,
}

impl EpsilonTollParams {
    pub fn new(mu: f64, epsilon: f64) -> Self {
        Self { mu: Some(mu), epsilon: Some(epsilon), big_p: None }
    }
}

/// Tolls under which `z*` is the only equilibrium:
///
/// * `mu - c_i(z*)` where type `j` uses road `i` in `z*`,
/// * `mu - c_i(z*) + epsilon` where only other types use it,
/// * `P` on roads unused by `z*`.
///
/// Requires a parallel network with strictly increasing latencies and an
/// acyclic support graph for `z*`.
pub fn epsilon_differentiated_tolls(
    network: &Network,
    z_star: &Routing,
    params: EpsilonTollParams,
) -> Result<TollSchedule, TollingError> {
    if !network.is_parallel() {
        return Err(ModelError::NotParallel.into());
    }
    network.require_strictly_increasing()?;
    z_star.check_feasible(network)?;
    let support = SupportGraph::of(z_star, SUPPORT_TOL);
    if !support.is_acyclic() {
        return Err(TollingError::CyclicSupport);
    }

    let latencies = network.latencies(&z_star.edge_flows);
    let used = support.used_roads();
    let max_used = used.iter().map(|&i| latencies[i]).fold(0.0, f64::max);
    let mu = params.mu.unwrap_or(max_used);
    if !mu.is_finite() {
        return Err(TollingError::InvalidParam { name: "mu", reason: format!("must be finite, got {mu}") });
    }
    if mu < max_used - 1e-12 * max_used.max(1.0) {
        return Err(TollingError::MuTooSmall { mu, required: max_used });
    }
    let epsilon = params.epsilon.unwrap_or(1e-3 * mu);
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(TollingError::InvalidParam {
            name: "epsilon",
            reason: format!("must be positive and finite, got {epsilon}"),
        });
    }
    let max_lat = (0..network.num_roads()).map(|i| network.latency_with_all_demand(i)).fold(0.0, f64::max);
    let big_p = params.big_p.unwrap_or(mu + max_lat + 1.0);
    let floor = mu + max_lat + epsilon;
    if !(big_p > floor && big_p.is_finite()) {
        return Err(TollingError::InvalidParam {
            name: "big_p",
            reason: format!("must exceed {floor} so unused roads are strictly dominated, got {big_p}"),
        });
    }

    let tolls = DMatrix::from_fn(network.num_roads(), network.num_types(), |i, j| {
        if !used.contains(&i) {
            big_p
        } else {
            let base = (mu - latencies[i]).max(0.0);
            if support.contains(i, j) {
                base
            } else {
                base + epsilon
            }
        }
    });
    let meta = EpsilonMeta { optimal: z_star.clone(), optimal_latencies: latencies, mu, epsilon, big_p };
    Ok(TollSchedule::new(tolls)?.with_epsilon_meta(meta))
}

/// `c_i(z) + mu - c_i(z*)` on roads used by `z*`, `P` elsewhere.
pub fn standard_cost(network: &Network, tolls: &TollSchedule, z: &Routing, road: usize) -> Result<f64, TollingError> {
    let meta = tolls.epsilon_meta().ok_or(TollingError::MissingMetadata)?;
    if road >= network.num_roads() {
        return Err(TollingError::RoadOutOfRange { road, num_roads: network.num_roads() });
    }
    if meta.optimal.road_total(road) > SUPPORT_TOL {
        Ok(network.road_latency(road, &z.edge_flows) + meta.mu - meta.optimal_latencies[road])
    } else {
        Ok(meta.big_p)
    }
}

/// Toll construction selected by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TollScheme {
    Untolled,
    Differentiated,
    Anonymous,
    Epsilon(EpsilonTollParams),
    Marginal,
}

impl TollScheme {
    pub fn name(&self) -> &'static str {
        match self {
            TollScheme::Untolled => "none",
            TollScheme::Differentiated => "differentiated",
            TollScheme::Anonymous => "anonymous",
            TollScheme::Epsilon(_) => "epsilon",
            TollScheme::Marginal => "marginal",
        }
    }

    /// Builds the schedule from an optimal routing `z_star`. The epsilon
    /// scheme needs `z_star` acyclic.
    pub fn build(&self, network: &Network, z_star: &Routing) -> Result<TollSchedule, TollingError> {
        match *self {
            TollScheme::Untolled => Ok(TollSchedule::zeros(network)),
            TollScheme::Differentiated => differentiated_tolls(network, z_star),
            TollScheme::Anonymous => anonymous_tolls(network, z_star),
            TollScheme::Epsilon(params) => epsilon_differentiated_tolls(network, z_star, params),
            TollScheme::Marginal => marginal_cost_tolls(network, z_star),
        }
    }
}
