//! Domain types for multitype congestion games with affine latencies.
//!
//! A network carries `n` roads (parallel links, or directed edges of a
//! general digraph) and `m` vehicle types. Every road has one latency shared
//! by all types, `c_i(z_i) = b_i + sum_j a^j_i z^j_i`, where the slope
//! `a^j_i` is the congestion footprint of type `j` on road `i`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Absolute threshold above which a flow counts as positive.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Default cap on enumerated simple paths per OD pair.
pub const DEFAULT_PATH_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("infeasible routing: {0}")]
    Infeasible(String),
    #[error("operation requires strictly increasing latencies, but road {road} has slope {slope} for type {type_idx}")]
    NotStrictlyIncreasing { road: usize, type_idx: usize, slope: f64 },
    #[error("operation requires a parallel network")]
    NotParallel,
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid { field: field.into(), reason: reason.into() }
}

/// Affine road latency `b + sum_j a^j z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLatency {
    slopes: Vec<f64>,
    intercept: f64,
}

impl AffineLatency {
    pub fn new(slopes: Vec<f64>, intercept: f64) -> Result<Self, ModelError> {
        if slopes.is_empty() {
            return Err(invalid("slopes", "must be non-empty"));
        }
        for (j, &a) in slopes.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(invalid(format!("slopes[{j}]"), format!("must be finite and nonnegative, got {a}")));
            }
        }
        if !intercept.is_finite() || intercept < 0.0 {
            return Err(invalid("intercept", format!("must be finite and nonnegative, got {intercept}")));
        }
        Ok(Self { slopes, intercept })
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn num_types(&self) -> usize {
        self.slopes.len()
    }

    pub fn min_slope(&self) -> f64 {
        self.slopes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_slope(&self) -> f64 {
        self.slopes.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.slopes.iter().all(|&a| a > 0.0)
    }

    /// Latency at the per-type flow vector `flows`.
    pub fn latency(&self, flows: &[f64]) -> Result<f64, ModelError> {
        if flows.len() != self.slopes.len() {
            return Err(ModelError::Dimension {
                what: "per-type flow vector",
                expected: self.slopes.len(),
                got: flows.len(),
            });
        }
        Ok(self.eval(flows.iter().copied()))
    }

    /// Latency plus a (type-specific) toll.
    pub fn tolled_latency(&self, flows: &[f64], toll: f64) -> Result<f64, ModelError> {
        if toll.is_nan() || toll < 0.0 {
            return Err(invalid("toll", format!("must be nonnegative, got {toll}")));
        }
        Ok(self.latency(flows)? + toll)
    }

    pub(crate) fn eval(&self, flows: impl IntoIterator<Item = f64>) -> f64 {
        self.intercept + self.slopes.iter().zip(flows).map(|(a, z)| a * z).sum::<f64>()
    }
}

/// One origin-destination demand of a single vehicle type.
#[derive(Debug, Clone, PartialEq)]
pub struct OdDemand {
    pub type_idx: usize,
    pub origin: usize,
    pub destination: usize,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// All roads link the single origin to the single destination.
    Parallel { demands: Vec<f64> },
    /// Roads are directed edges `endpoints[e] = (from, to)` over `nodes`.
    General {
        nodes: Vec<String>,
        endpoints: Vec<(usize, usize)>,
        od: Vec<OdDemand>,
        /// Simple paths (edge indices) per OD entry.
        paths: Vec<Vec<Vec<usize>>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Parallel,
    General,
}

/// A routable unit of demand: one vehicle type with a fixed set of strategies
/// (roads for parallel networks, paths for general ones).
#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub type_idx: usize,
    pub demand: f64,
    pub strategies: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    types: Vec<String>,
    roads: Vec<AffineLatency>,
    topology: Topology,
    commodities: Vec<Commodity>,
}

impl Network {
    pub fn parallel(types: Vec<String>, roads: Vec<AffineLatency>, demands: Vec<f64>) -> Result<Self, ModelError> {
        check_common(&types, &roads)?;
        if demands.len() != types.len() {
            return Err(ModelError::Dimension { what: "demands", expected: types.len(), got: demands.len() });
        }
        check_demands(demands.iter().copied(), "demands")?;
        let strategies: Vec<Vec<usize>> = (0..roads.len()).map(|i| vec![i]).collect();
        let commodities = demands
            .iter()
            .enumerate()
            .map(|(j, &d)| Commodity { type_idx: j, demand: d, strategies: strategies.clone() })
            .collect();
        Ok(Self { types, roads, topology: Topology::Parallel { demands }, commodities })
    }

    /// Builds a general network. When `paths` is `None`, simple paths are
    /// enumerated per OD entry (at most `path_cap` each).
    pub fn general(
        types: Vec<String>,
        nodes: Vec<String>,
        endpoints: Vec<(usize, usize)>,
        roads: Vec<AffineLatency>,
        od: Vec<OdDemand>,
        paths: Option<Vec<Vec<Vec<usize>>>>,
        path_cap: usize,
    ) -> Result<Self, ModelError> {
        check_common(&types, &roads)?;
        if nodes.is_empty() {
            return Err(invalid("nodes", "must be non-empty"));
        }
        if endpoints.len() != roads.len() {
            return Err(ModelError::Dimension { what: "edge endpoints", expected: roads.len(), got: endpoints.len() });
        }
        for (e, &(u, v)) in endpoints.iter().enumerate() {
            if u >= nodes.len() || v >= nodes.len() {
                return Err(invalid(format!("roads[{e}]"), "endpoint out of range"));
            }
        }
        if od.is_empty() {
            return Err(invalid("od", "must be non-empty"));
        }
        check_demands(od.iter().map(|o| o.demand), "od.demand")?;
        for (k, o) in od.iter().enumerate() {
            if o.type_idx >= types.len() {
                return Err(invalid(format!("od[{k}].type"), "unknown vehicle type"));
            }
            if o.origin >= nodes.len() || o.destination >= nodes.len() {
                return Err(invalid(format!("od[{k}]"), "node out of range"));
            }
            if o.origin == o.destination {
                return Err(invalid(format!("od[{k}]"), "origin equals destination"));
            }
        }
        let paths = match paths {
            Some(p) => {
                if p.len() != od.len() {
                    return Err(ModelError::Dimension { what: "paths per OD entry", expected: od.len(), got: p.len() });
                }
                for (k, (o, plist)) in od.iter().zip(&p).enumerate() {
                    for path in plist {
                        check_path(path, &endpoints, o.origin, o.destination)
                            .map_err(|r| invalid(format!("paths[{k}]"), r))?;
                    }
                }
                p
            }
            None => {
                od.iter().map(|o| simple_paths(nodes.len(), &endpoints, o.origin, o.destination, path_cap)).collect()
            }
        };
        for (k, p) in paths.iter().enumerate() {
            if p.is_empty() {
                return Err(invalid(format!("od[{k}]"), "has no path"));
            }
        }
        let commodities = od
            .iter()
            .zip(&paths)
            .map(|(o, p)| Commodity { type_idx: o.type_idx, demand: o.demand, strategies: p.clone() })
            .collect();
        Ok(Self { types, roads, topology: Topology::General { nodes, endpoints, od, paths }, commodities })
    }

    pub fn kind(&self) -> NetworkKind {
        match self.topology {
            Topology::Parallel { .. } => NetworkKind::Parallel,
            Topology::General { .. } => NetworkKind::General,
        }
    }

    pub fn is_parallel(&self) -> bool {
        self.kind() == NetworkKind::Parallel
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn roads(&self) -> &[AffineLatency] {
        &self.roads
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_roads(&self) -> usize {
        self.roads.len()
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    /// Total demand per vehicle type.
    pub fn type_demands(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.num_types()];
        for c in &self.commodities {
            d[c.type_idx] += c.demand;
        }
        d
    }

    pub fn total_demand(&self) -> f64 {
        self.commodities.iter().map(|c| c.demand).sum()
    }

    /// Number of (strategy, commodity) flow variables.
    pub fn num_strategy_vars(&self) -> usize {
        self.commodities.iter().map(|c| c.strategies.len()).sum()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.roads.iter().all(AffineLatency::is_strictly_increasing)
    }

    /// Errors unless every slope is positive.
    pub fn require_strictly_increasing(&self) -> Result<(), ModelError> {
        for (i, r) in self.roads.iter().enumerate() {
            if let Some((j, &a)) = r.slopes().iter().enumerate().find(|(_, &a)| a <= 0.0) {
                return Err(ModelError::NotStrictlyIncreasing { road: i, type_idx: j, slope: a });
            }
        }
        Ok(())
    }

    pub fn road_latency(&self, road: usize, edge_flows: &DMatrix<f64>) -> f64 {
        self.roads[road].eval(edge_flows.row(road).iter().copied())
    }

    /// Per-road latencies at `edge_flows`.
    pub fn latencies(&self, edge_flows: &DMatrix<f64>) -> Vec<f64> {
        (0..self.num_roads()).map(|i| self.road_latency(i, edge_flows)).collect()
    }

    /// Social cost of a routing; the routing is checked for feasibility.
    pub fn social_cost(&self, routing: &Routing) -> Result<f64, ModelError> {
        routing.check_feasible(self)?;
        Ok(self.social_cost_unchecked(&routing.edge_flows))
    }

    /// `sum_i (sum_j z^j_i) c_i(z_i)` without feasibility checks.
    pub fn social_cost_unchecked(&self, edge_flows: &DMatrix<f64>) -> f64 {
        (0..self.num_roads()).map(|i| edge_flows.row(i).sum() * self.road_latency(i, edge_flows)).sum()
    }

    /// Maximum ratio of two types' slopes on a road.
    pub fn degree_of_asymmetry(&self) -> Asymmetry {
        let mut k: f64 = 1.0;
        for r in &self.roads {
            let max = r.max_slope();
            if max == 0.0 {
                continue;
            }
            let min = r.min_slope();
            if min == 0.0 {
                return Asymmetry::Unbounded;
            }
            k = k.max(max / min);
        }
        Asymmetry::Finite(k)
    }

    /// Latency of road `i` when it carries every type's full demand.
    pub fn latency_with_all_demand(&self, road: usize) -> f64 {
        self.roads[road].eval(self.type_demands())
    }
}

fn check_common(types: &[String], roads: &[AffineLatency]) -> Result<(), ModelError> {
    if types.is_empty() {
        return Err(invalid("types", "must be non-empty"));
    }
    if roads.is_empty() {
        return Err(invalid("roads", "must be non-empty"));
    }
    for (i, r) in roads.iter().enumerate() {
        if r.num_types() != types.len() {
            return Err(invalid(
                format!("roads[{i}].slopes"),
                format!("expected {} entries, got {}", types.len(), r.num_types()),
            ));
        }
    }
    Ok(())
}

fn check_demands(demands: impl Iterator<Item = f64>, field: &str) -> Result<(), ModelError> {
    for (k, d) in demands.enumerate() {
        if !d.is_finite() || d < 0.0 {
            return Err(invalid(format!("{field}[{k}]"), format!("must be finite and nonnegative, got {d}")));
        }
    }
    Ok(())
}

fn check_path(path: &[usize], endpoints: &[(usize, usize)], origin: usize, destination: usize) -> Result<(), String> {
    if path.is_empty() {
        return Err("empty path".into());
    }
    let mut at = origin;
    let mut seen = BTreeSet::from([origin]);
    for &e in path {
        let &(u, v) = endpoints.get(e).ok_or(format!("edge index {e} out of range"))?;
        if u != at {
            return Err(format!("edge {e} does not continue the path"));
        }
        if !seen.insert(v) {
            return Err("path is not simple".into());
        }
        at = v;
    }
    if at != destination {
        return Err("path does not end at the destination".into());
    }
    Ok(())
}

/// Simple paths from `origin` to `destination` by DFS, in edge-index order.
pub fn simple_paths(
    num_nodes: usize,
    endpoints: &[(usize, usize)],
    origin: usize,
    destination: usize,
    cap: usize,
) -> Vec<Vec<usize>> {
    let mut out_edges = vec![Vec::new(); num_nodes];
    for (e, &(u, _)) in endpoints.iter().enumerate() {
        out_edges[u].push(e);
    }
    let mut walk = PathWalk {
        destination,
        cap,
        out_edges: &out_edges,
        endpoints,
        visited: vec![false; num_nodes],
        stack: Vec::new(),
        paths: Vec::new(),
    };
    walk.visit(origin);
    walk.paths
}

struct PathWalk<'a> {
    destination: usize,
    cap: usize,
    out_edges: &'a [Vec<usize>],
    endpoints: &'a [(usize, usize)],
    visited: Vec<bool>,
    stack: Vec<usize>,
    paths: Vec<Vec<usize>>,
}

impl PathWalk<'_> {
    fn visit(&mut self, at: usize) {
        if self.paths.len() >= self.cap {
            return;
        }
        if at == self.destination {
            self.paths.push(self.stack.clone());
            return;
        }
        self.visited[at] = true;
        for &e in &self.out_edges[at] {
            let next = self.endpoints[e].1;
            if !self.visited[next] {
                self.stack.push(e);
                self.visit(next);
                self.stack.pop();
            }
        }
        self.visited[at] = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymmetry {
    Finite(f64),
    /// Some road mixes zero and positive slopes.
    Unbounded,
}

impl Asymmetry {
    pub fn finite(self) -> Option<f64> {
        match self {
            Asymmetry::Finite(k) => Some(k),
            Asymmetry::Unbounded => None,
        }
    }
}

impl fmt::Display for Asymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Asymmetry::Finite(k) => write!(f, "{k}"),
            Asymmetry::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Per-road per-type flows `z^j_i`, plus per-commodity strategy flows for
/// general networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Routing {
    pub edge_flows: DMatrix<f64>,
    pub path_flows: Option<Vec<Vec<f64>>>,
}

impl Routing {
    /// Parallel routing from an `n x m` flow matrix.
    pub fn from_edge_flows(edge_flows: DMatrix<f64>) -> Self {
        Self { edge_flows, path_flows: None }
    }

    /// Parallel routing from rows of per-type flows (one row per road).
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Self::from_edge_flows(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn zeros(network: &Network) -> Self {
        let edge_flows = DMatrix::zeros(network.num_roads(), network.num_types());
        let path_flows = (!network.is_parallel())
            .then(|| network.commodities().iter().map(|c| vec![0.0; c.strategies.len()]).collect());
        Self { edge_flows, path_flows }
    }

    /// Aggregates per-commodity strategy flows into a routing.
    pub fn from_strategy_flows(network: &Network, flows: &[Vec<f64>]) -> Self {
        let mut edge_flows = DMatrix::zeros(network.num_roads(), network.num_types());
        for (c, xs) in network.commodities().iter().zip(flows) {
            for (s, &x) in c.strategies.iter().zip(xs) {
                for &e in s {
                    edge_flows[(e, c.type_idx)] += x;
                }
            }
        }
        let path_flows = (!network.is_parallel()).then(|| flows.to_vec());
        Self { edge_flows, path_flows }
    }

    /// Per-commodity strategy flows (derived from the edge flows on parallel
    /// networks).
    pub fn strategy_flows(&self, network: &Network) -> Result<Vec<Vec<f64>>, ModelError> {
        match &self.path_flows {
            Some(p) => Ok(p.clone()),
            None if network.is_parallel() => {
                Ok((0..network.num_types()).map(|j| self.edge_flows.column(j).iter().copied().collect()).collect())
            }
            None => Err(ModelError::Infeasible("general network routing requires path flows".into())),
        }
    }

    pub fn road_total(&self, road: usize) -> f64 {
        self.edge_flows.row(road).sum()
    }

    pub fn check_feasible(&self, network: &Network) -> Result<(), ModelError> {
        let (n, m) = self.edge_flows.shape();
        if n != network.num_roads() {
            return Err(ModelError::Dimension { what: "routing rows (roads)", expected: network.num_roads(), got: n });
        }
        if m != network.num_types() {
            return Err(ModelError::Dimension {
                what: "routing columns (types)",
                expected: network.num_types(),
                got: m,
            });
        }
        let scale = 1.0 + network.total_demand();
        let tol = 1e-9 * scale;
        if let Some(v) = self.edge_flows.iter().find(|v| !v.is_finite() || **v < -tol) {
            return Err(ModelError::Infeasible(format!("negative or non-finite flow {v}")));
        }
        match (&self.path_flows, network.topology()) {
            (_, Topology::Parallel { demands }) => {
                for (j, &d) in demands.iter().enumerate() {
                    let s = self.edge_flows.column(j).sum();
                    if (s - d).abs() > tol {
                        return Err(ModelError::Infeasible(format!("type {j} routes {s} but demands {d}")));
                    }
                }
            }
            (Some(paths), Topology::General { .. }) => {
                let commodities = network.commodities();
                if paths.len() != commodities.len() {
                    return Err(ModelError::Dimension {
                        what: "path flow groups",
                        expected: commodities.len(),
                        got: paths.len(),
                    });
                }
                for (k, (c, xs)) in commodities.iter().zip(paths).enumerate() {
                    if xs.len() != c.strategies.len() {
                        return Err(ModelError::Dimension {
                            what: "paths of an OD entry",
                            expected: c.strategies.len(),
                            got: xs.len(),
                        });
                    }
                    if xs.iter().any(|&x| !x.is_finite() || x < -tol) {
                        return Err(ModelError::Infeasible(format!("negative path flow for OD entry {k}")));
                    }
                    let s: f64 = xs.iter().sum();
                    if (s - c.demand).abs() > tol {
                        return Err(ModelError::Infeasible(format!(
                            "OD entry {k} routes {s} but demands {}",
                            c.demand
                        )));
                    }
                }
                let agg = Routing::from_strategy_flows(network, paths);
                let diff = (&agg.edge_flows - &self.edge_flows).amax();
                if diff > tol {
                    return Err(ModelError::Infeasible(format!("edge flows differ from path aggregation by {diff}")));
                }
            }
            (None, Topology::General { .. }) => {
                return Err(ModelError::Infeasible("general network routing requires path flows".into()))
            }
        }
        Ok(())
    }

    /// Largest absolute difference between two routings' edge flows.
    pub fn max_abs_diff(&self, other: &Routing) -> f64 {
        if self.edge_flows.shape() != other.edge_flows.shape() {
            return f64::INFINITY;
        }
        (&self.edge_flows - &other.edge_flows).amax()
    }
}

/// Per-road per-type nonnegative tolls `tau^j_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TollSchedule {
    tolls: DMatrix<f64>,
    epsilon_meta: Option<EpsilonMeta>,
}

/// Parameters an epsilon-differentiated schedule was built from; needed to
/// evaluate standard costs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonMeta {
    pub optimal: Routing,
    pub optimal_latencies: Vec<f64>,
    pub mu: f64,
    pub epsilon: f64,
    pub big_p: f64,
}

impl TollSchedule {
    pub fn new(tolls: DMatrix<f64>) -> Result<Self, ModelError> {
        for i in 0..tolls.nrows() {
            for j in 0..tolls.ncols() {
                let t = tolls[(i, j)];
                if !t.is_finite() || t < 0.0 {
                    return Err(invalid(
                        format!("tolls[{i}][{j}]"),
                        format!("must be finite and nonnegative, got {t}"),
                    ));
                }
            }
        }
        Ok(Self { tolls, epsilon_meta: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(invalid(format!("tolls[{bad}]"), "rows must have equal length"));
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn zeros(network: &Network) -> Self {
        Self { tolls: DMatrix::zeros(network.num_roads(), network.num_types()), epsilon_meta: None }
    }

    pub(crate) fn with_epsilon_meta(mut self, meta: EpsilonMeta) -> Self {
        self.epsilon_meta = Some(meta);
        self
    }

    pub fn tolls(&self) -> &DMatrix<f64> {
        &self.tolls
    }

    pub fn get(&self, road: usize, type_idx: usize) -> f64 {
        self.tolls[(road, type_idx)]
    }

    pub fn epsilon_meta(&self) -> Option<&EpsilonMeta> {
        self.epsilon_meta.as_ref()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.tolls.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn check_shape(&self, network: &Network) -> Result<(), ModelError> {
        let (n, m) = self.tolls.shape();
        if n != network.num_roads() || m != network.num_types() {
            return Err(ModelError::Dimension {
                what: "toll matrix entries",
                expected: network.num_roads() * network.num_types(),
                got: n * m,
            });
        }
        Ok(())
    }
}

/// Bipartite roads x types graph with an edge wherever a type has positive
/// flow on a road.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportGraph {
    num_roads: usize,
    num_types: usize,
    edges: BTreeSet<(usize, usize)>,
}

/// Node of a [`SupportGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SupportNode {
    Road(usize),
    Type(usize),
}

impl SupportGraph {
    pub fn from_edges(num_roads: usize, num_types: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { num_roads, num_types, edges: edges.into_iter().collect() }
    }

    pub fn of(routing: &Routing, tol: f64) -> Self {
        let (n, m) = routing.edge_flows.shape();
        let edges = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| routing.edge_flows[(i, j)] > tol)
            .collect();
        Self { num_roads: n, num_types: m, edges }
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn num_roads(&self) -> usize {
        self.num_roads
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn contains(&self, road: usize, type_idx: usize) -> bool {
        self.edges.contains(&(road, type_idx))
    }

    /// Roads used by `type_idx`.
    pub fn roads_of_type(&self, type_idx: usize) -> BTreeSet<usize> {
        self.edges.iter().filter(|&&(_, j)| j == type_idx).map(|&(i, _)| i).collect()
    }

    /// Types present on `road`.
    pub fn types_on_road(&self, road: usize) -> BTreeSet<usize> {
        self.edges.range((road, 0)..(road + 1, 0)).map(|&(_, j)| j).collect()
    }

    /// Roads carrying any flow.
    pub fn used_roads(&self) -> BTreeSet<usize> {
        self.edges.iter().map(|&(i, _)| i).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.num_roads + self.num_types).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j) in &self.edges {
            let a = find(&mut parent, i);
            let b = find(&mut parent, self.num_roads + j);
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }

    fn neighbors(&self, node: SupportNode) -> Vec<SupportNode> {
        match node {
            SupportNode::Road(i) => self.types_on_road(i).into_iter().map(SupportNode::Type).collect(),
            SupportNode::Type(j) => self.roads_of_type(j).into_iter().map(SupportNode::Road).collect(),
        }
    }

    /// A shortest cycle as an alternating node sequence starting at a road
    /// (`r1, t1, r2, t2, ...`; the last type links back to `r1`). Ties are
    /// broken by the smallest starting edge.
    pub fn shortest_cycle(&self) -> Option<Vec<SupportNode>> {
        let mut best: Option<Vec<SupportNode>> = None;
        // A shortest cycle through edge (u, v) is u + shortest u-v path avoiding that edge.
        for &(i, j) in &self.edges {
            let (src, dst) = (SupportNode::Road(i), SupportNode::Type(j));
            let mut prev: std::collections::BTreeMap<SupportNode, SupportNode> = Default::default();
            let mut queue = VecDeque::from([src]);
            let mut seen = BTreeSet::from([src]);
            let mut found = false;
            while let Some(u) = queue.pop_front() {
                for w in self.neighbors(u) {
                    if (u == src && w == dst) || seen.contains(&w) {
                        continue;
                    }
                    seen.insert(w);
                    prev.insert(w, u);
                    if w == dst {
                        found = true;
                        break;
                    }
                    queue.push_back(w);
                }
                if found {
                    break;
                }
            }
            if !found {
                continue;
            }
            let mut path = vec![dst];
            let mut at = dst;
            while at != src {
                at = prev[&at];
                path.push(at);
            }
            // path: dst .. src; as a cycle starting at the road src:
            path.reverse();
            if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                best = Some(path);
            }
        }
        best
    }
}
