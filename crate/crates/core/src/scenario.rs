//! Scenario and toll files (JSON, schema version 1) and seeded instance
//! generation.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "network": {
//!     "kind": "parallel",
//!     "types": ["human", "autonomous"],
//!     "roads": [{"slopes": [2, 1], "intercept": 0}, {"slopes": [1, 2], "intercept": 0}],
//!     "demands": [1, 1]
//!   },
//!   "tolls": [[1, 1], [1, 1]],
//!   "routings": {"optimal": {"edge_flows": [[0, 1], [1, 0]]}}
//! }
//! ```
//!
//! General networks use `"kind": "general"`, a `nodes` list, `from`/`to` on
//! each road, and an `od` list of `{type, origin, destination, demand}`
//! entries; `paths` (edge indices per OD entry) and `path_cap` are optional.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AffineLatency, ModelError, Network, OdDemand, Routing, TollSchedule, Topology, DEFAULT_PATH_CAP};
use crate::rng::SeededRng;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid instance spec: {0}")]
    Spec(String),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Schema(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub network: Network,
    pub tolls: Option<TollSchedule>,
    pub routings: BTreeMap<String, Routing>,
}

impl ScenarioFile {
    pub fn new(network: Network) -> Self {
        Self { schema_version: SCHEMA_VERSION, network, tolls: None, routings: BTreeMap::new() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    schema_version: u32,
    network: NetworkDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolls: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    routings: BTreeMap<String, RoutingDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NetworkDoc {
    Parallel {
        types: Vec<String>,
        roads: Vec<RoadDoc>,
        demands: Vec<f64>,
    },
    General {
        types: Vec<String>,
        nodes: Vec<String>,
        roads: Vec<EdgeDoc>,
        od: Vec<OdDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        paths: Option<Vec<Vec<Vec<usize>>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_cap: Option<usize>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoadDoc {
    slopes: Vec<f64>,
    intercept: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    to: String,
    slopes: Vec<f64>,
    intercept: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OdDoc {
    #[serde(rename = "type")]
    type_name: String,
    origin: String,
    destination: String,
    demand: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoutingDoc {
    edge_flows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path_flows: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TollsDoc {
    tolls: Vec<Vec<f64>>,
}

fn road_latency(i: usize, slopes: Vec<f64>, intercept: f64) -> Result<AffineLatency, ModelError> {
    AffineLatency::new(slopes, intercept).map_err(|e| match e {
        ModelError::Invalid { field, reason } => ModelError::Invalid { field: format!("roads[{i}].{field}"), reason },
        other => other,
    })
}

fn lookup(names: &[String], name: &str, field: String) -> Result<usize, ModelError> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| ModelError::Invalid { field, reason: format!("unknown name {name:?}") })
}

fn matrix(rows: &[Vec<f64>], n: usize, m: usize, what: &'static str) -> Result<DMatrix<f64>, ModelError> {
    if rows.len() != n {
        return Err(ModelError::Dimension { what, expected: n, got: rows.len() });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != m) {
        return Err(ModelError::Dimension { what, expected: m, got: r.len() });
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn network_from_doc(doc: NetworkDoc) -> Result<Network, ModelError> {
    match doc {
        NetworkDoc::Parallel { types, roads, demands } => {
            let roads = roads
                .into_iter()
                .enumerate()
                .map(|(i, r)| road_latency(i, r.slopes, r.intercept))
                .collect::<Result<_, _>>()?;
            Network::parallel(types, roads, demands)
        }
        NetworkDoc::General { types, nodes, roads, od, paths, path_cap } => {
            let mut endpoints = Vec::with_capacity(roads.len());
            let mut lats = Vec::with_capacity(roads.len());
            for (i, r) in roads.into_iter().enumerate() {
                endpoints.push((
                    lookup(&nodes, &r.from, format!("roads[{i}].from"))?,
                    lookup(&nodes, &r.to, format!("roads[{i}].to"))?,
                ));
                lats.push(road_latency(i, r.slopes, r.intercept)?);
            }
            let od = od
                .into_iter()
                .enumerate()
                .map(|(k, o)| {
                    Ok(OdDemand {
                        type_idx: lookup(&types, &o.type_name, format!("od[{k}].type"))?,
                        origin: lookup(&nodes, &o.origin, format!("od[{k}].origin"))?,
                        destination: lookup(&nodes, &o.destination, format!("od[{k}].destination"))?,
                        demand: o.demand,
                    })
                })
                .collect::<Result<_, ModelError>>()?;
            Network::general(types, nodes, endpoints, lats, od, paths, path_cap.unwrap_or(DEFAULT_PATH_CAP))
        }
    }
}

fn network_to_doc(network: &Network) -> NetworkDoc {
    let types = network.types().to_vec();
    match network.topology() {
        Topology::Parallel { demands } => NetworkDoc::Parallel {
            types,
            roads: network
                .roads()
                .iter()
                .map(|r| RoadDoc { slopes: r.slopes().to_vec(), intercept: r.intercept() })
                .collect(),
            demands: demands.clone(),
        },
        Topology::General { nodes, endpoints, od, paths } => NetworkDoc::General {
            roads: network
                .roads()
                .iter()
                .zip(endpoints)
                .map(|(r, &(u, v))| EdgeDoc {
                    from: nodes[u].clone(),
                    to: nodes[v].clone(),
                    slopes: r.slopes().to_vec(),
                    intercept: r.intercept(),
                })
                .collect(),
            od: od
                .iter()
                .map(|o| OdDoc {
                    type_name: types[o.type_idx].clone(),
                    origin: nodes[o.origin].clone(),
                    destination: nodes[o.destination].clone(),
                    demand: o.demand,
                })
                .collect(),
            types,
            nodes: nodes.clone(),
            paths: Some(paths.clone()),
            path_cap: None,
        },
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let doc: FileDoc = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::Version(doc.schema_version));
    }
    let network = network_from_doc(doc.network)?;
    let (n, m) = (network.num_roads(), network.num_types());
    let tolls = doc.tolls.map(|rows| TollSchedule::new(matrix(&rows, n, m, "tolls")?)).transpose()?;
    let mut routings = BTreeMap::new();
    for (name, r) in doc.routings {
        let routing =
            Routing { edge_flows: matrix(&r.edge_flows, n, m, "routing edge_flows")?, path_flows: r.path_flows };
        routing.check_feasible(&network).map_err(|e| match e {
            ModelError::Infeasible(reason) => ModelError::Invalid { field: format!("routings.{name}"), reason },
            other => other,
        })?;
        routings.insert(name, routing);
    }
    Ok(ScenarioFile { schema_version: doc.schema_version, network, tolls, routings })
}

pub fn serialize_scenario(s: &ScenarioFile) -> String {
    let doc = FileDoc {
        schema_version: s.schema_version,
        network: network_to_doc(&s.network),
        tolls: s.tolls.as_ref().map(TollSchedule::rows),
        routings: s
            .routings
            .iter()
            .map(|(k, r)| {
                (k.clone(), RoutingDoc { edge_flows: rows_of(&r.edge_flows), path_flows: r.path_flows.clone() })
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("scenario documents serialize");
    out.push('\n');
    out
}

/// Parses a `{"tolls": [[...], ...]}` document.
pub fn parse_tolls(text: &str) -> Result<TollSchedule, ScenarioError> {
    let doc: TollsDoc = serde_json::from_str(text)?;
    Ok(TollSchedule::from_rows(&doc.tolls)?)
}

pub fn serialize_tolls(tolls: &TollSchedule) -> String {
    let mut out = serde_json::to_string_pretty(&TollsDoc { tolls: tolls.rows() }).expect("tolls serialize");
    out.push('\n');
    out
}

/// Recipe for a random parallel network.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGenSpec {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub slope_range: (f64, f64),
    pub intercept_range: (f64, f64),
    pub demand_range: (f64, f64),
    /// Largest allowed slope ratio within a road.
    pub target_k: Option<f64>,
}

impl InstanceGenSpec {
    pub fn new(seed: u64, n: usize, m: usize) -> Self {
        Self {
            seed,
            n,
            m,
            slope_range: (0.5, 3.0),
            intercept_range: (0.0, 1.0),
            demand_range: (0.25, 1.5),
            target_k: None,
        }
    }

    pub fn with_target_k(mut self, k: f64) -> Self {
        self.target_k = Some(k);
        self
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), min: f64) -> Result<(), ScenarioError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= min) {
        return Err(ScenarioError::Spec(format!("{name} [{lo}, {hi}] must be finite, ordered and at least {min}")));
    }
    Ok(())
}

/// Draws a parallel network from `spec`. Slopes, then the intercept, are
/// drawn road by road, then one demand per type.
///
/// With `target_k` set, each road whose slope ratio `r` exceeds it has its
/// slopes compressed toward the road minimum, `a -> a_min (1 + (a/a_min - 1)(k-1)/(r-1))`,
/// which keeps every slope inside the original range.
pub fn generate_instance(spec: &InstanceGenSpec) -> Result<Network, ScenarioError> {
    if spec.n == 0 || spec.m == 0 {
        return Err(ScenarioError::Spec("n and m must be positive".into()));
    }
    if spec.slope_range.0 <= 0.0 {
        return Err(ScenarioError::Spec("slope_range lower end must be positive".into()));
    }
    check_range("slope_range", spec.slope_range, 0.0)?;
    check_range("intercept_range", spec.intercept_range, 0.0)?;
    check_range("demand_range", spec.demand_range, 0.0)?;
    if let Some(k) = spec.target_k {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(ScenarioError::Spec(format!("target_k must be finite and at least 1, got {k}")));
        }
    }
    let mut rng = SeededRng::new(spec.seed);
    let mut roads = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut slopes: Vec<f64> = (0..spec.m).map(|_| rng.uniform(spec.slope_range.0, spec.slope_range.1)).collect();
        let intercept = rng.uniform(spec.intercept_range.0, spec.intercept_range.1);
        if let Some(k) = spec.target_k {
            let a_min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
            let a_max = slopes.iter().copied().fold(0.0, f64::max);
            let r = a_max / a_min;
            if r > k {
                for a in &mut slopes {
                    *a = (a_min * (1.0 + (*a / a_min - 1.0) * (k - 1.0) / (r - 1.0))).min(a_min * k);
                }
            }
        }
        roads.push(AffineLatency::new(slopes, intercept)?);
    }
    let demands = (0..spec.m).map(|_| rng.uniform(spec.demand_range.0, spec.demand_range.1)).collect();
    let types = (1..=spec.m).map(|j| format!("type{j}")).collect();
    Ok(Network::parallel(types, roads, demands)?)
}
