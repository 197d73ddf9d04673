//! User IoT streaming requirements turned into a datapath plan, plus a
//! collection simulation that checks rate, jitter, and operation results.
//!
//! Coverage is an explicit station set or a named group from the topology
//! file. The root defaults to the switch minimizing total tree hop count from
//! the coverage stations (ties by name); a `root_hint` overrides that.
//! Aggregation runs as a (sum, count) fold up the tree in the planning layer:
//! stations are leaves, interior nodes on leaf-to-root paths combine, the
//! root finalizes. Within an epoch a station's latest reading wins, and a
//! station missing from an epoch is a per-epoch diagnostic, not a failure.
//! Jitter is the arrival spread at the root: max minus min of
//! `reading timestamp + path latency` across the stations present.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mst::{compute_mst, orient_tree, tree_path, MstError, SpanningTree};
use crate::ruleplan::{synthesize_rules, RulePlan, RulePlanError};
use crate::topology::{NodeId, Topology};

#[derive(Debug, Error)]
pub enum RequestError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown station {0}")]
    UnknownStation(NodeId),
    #[error("unknown coverage group {0:?}")]
    UnknownGroup(String),
    #[error("coverage is empty")]
    EmptyCoverage,
    #[error("reading from station {0} outside coverage")]
    StationOutsideCoverage(NodeId),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mst(#[from] MstError),
    #[error(transparent)]
    Rules(#[from] RulePlanError),
}

/// Requested fold over station readings.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggOperation {
    None,
    Sum,
    Average,
}

/// Stations either listed explicitly or named via a topology group tag.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoverageSpec {
    Group(String),
    Stations(Vec<NodeId>),
}

/// IoT streaming data collection requirements.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct UserRequest {
    pub coverage: CoverageSpec,
    pub data_type: String,
    pub rate_hz: f64,
    pub interval_s: f64,
    pub jitter_bound_ms: f64,
    pub operation: AggOperation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_hint: Option<NodeId>,
}

impl UserRequest {
    pub fn parse(text: &str) -> Result<Self, RequestError> {
        let req: UserRequest =
            serde_json::from_str(text).map_err(|e| RequestError::Parse(e.to_string()))?;
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        if self.rate_hz <= 0.0 || !self.rate_hz.is_finite() {
            return Err(RequestError::Invalid(format!("rate_hz {} must be > 0", self.rate_hz)));
        }
        if self.interval_s <= 0.0 || !self.interval_s.is_finite() {
            return Err(RequestError::Invalid(format!(
                "interval_s {} must be > 0",
                self.interval_s
            )));
        }
        if self.jitter_bound_ms < 0.0 || !self.jitter_bound_ms.is_finite() {
            return Err(RequestError::Invalid(format!(
                "jitter_bound_ms {} must be >= 0",
                self.jitter_bound_ms
            )));
        }
        if let CoverageSpec::Stations(stations) = &self.coverage {
            if stations.is_empty() {
                return Err(RequestError::EmptyCoverage);
            }
        }
        Ok(())
    }
}

/// One sensor reading entering the network at a base station.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct SensorReading {
    pub station: NodeId,
    pub data_type: String,
    pub value: f64,
    pub timestamp_ms: u64,
}

/// Readings file: one `station,data_type,value,timestamp_ms` per line.
pub fn parse_readings(text: &str) -> Result<Vec<SensorReading>, RequestError> {
    let mut readings = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(RequestError::Parse(format!(
                "line {}: expected station,data_type,value,timestamp_ms",
                lineno + 1
            )));
        }
        let value: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| RequestError::Parse(format!("line {}: bad value {:?}", lineno + 1, fields[2])))?;
        let timestamp_ms: u64 = fields[3].trim().parse().map_err(|_| {
            RequestError::Parse(format!("line {}: bad timestamp {:?}", lineno + 1, fields[3]))
        })?;
        readings.push(SensorReading {
            station: NodeId::new(fields[0].trim()),
            data_type: fields[1].trim().to_string(),
            value,
            timestamp_ms,
        });
    }
    Ok(readings)
}

/// Role of a tree node in the collection fold.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggRole {
    Leaf,
    Combiner,
    Root,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AggregationPlan {
    pub roles: BTreeMap<NodeId, AggRole>,
}

/// Mergeable partial aggregate.
#[derive(Clone, Copy, PartialEq, Debug, Default, Serialize)]
pub struct Partial {
    pub sum: f64,
    pub count: u64,
}

/// Associative, commutative merge; `(0, 0)` is the identity.
pub fn combine(a: Partial, b: Partial) -> Partial {
    Partial { sum: a.sum + b.sum, count: a.count + b.count }
}

/// The compiled answer to a request: root, tree, rules, aggregation roles.
#[derive(Clone, Debug)]
pub struct DatapathPlan {
    pub request: UserRequest,
    pub coverage: Vec<NodeId>,
    pub root: NodeId,
    pub tree: SpanningTree,
    pub rules: RulePlan,
    pub agg: AggregationPlan,
}

fn resolve_coverage(t: &Topology, spec: &CoverageSpec) -> Result<Vec<NodeId>, RequestError> {
    let stations: Vec<NodeId> = match spec {
        CoverageSpec::Group(tag) => t
            .group(tag)
            .ok_or_else(|| RequestError::UnknownGroup(tag.clone()))?
            .to_vec(),
        CoverageSpec::Stations(stations) => {
            let mut out = stations.clone();
            out.sort();
            out.dedup();
            out
        }
    };
    if stations.is_empty() {
        return Err(RequestError::EmptyCoverage);
    }
    for station in &stations {
        if !t.node(station).is_some_and(|n| n.is_host()) {
            return Err(RequestError::UnknownStation(station.clone()));
        }
    }
    Ok(stations)
}

/// Picks the switch minimizing the summed tree distance from the coverage
/// stations' attachment switches; ties go to the lexicographically smallest
/// name.
fn auto_root(t: &Topology, tree_edges: &crate::mst::EdgeSet, coverage: &[NodeId]) -> NodeId {
    let mut adjacency: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for link in tree_edges.edges() {
        adjacency.entry(&link.a.node).or_default().push(&link.b.node);
        adjacency.entry(&link.b.node).or_default().push(&link.a.node);
    }
    let mut totals: BTreeMap<NodeId, usize> = t.switches().map(|s| (s.id.clone(), 0)).collect();
    for station in coverage {
        let start = t.host_attachment(station).expect("validated station").switch;
        let mut seen: BTreeMap<NodeId, usize> = BTreeMap::from([(start.clone(), 0)]);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            let d = seen[&cur];
            for next in adjacency.get(&cur).into_iter().flatten() {
                if !seen.contains_key(*next) {
                    seen.insert((*next).clone(), d + 1);
                    queue.push_back((*next).clone());
                }
            }
        }
        for (switch, total) in totals.iter_mut() {
            *total += *seen.get(switch).expect("MST spans all switches");
        }
    }
    totals
        .into_iter()
        .min_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
        .map(|(id, _)| id)
        .expect("at least one switch")
}

/// Compiles a request: resolve coverage, pick the root, orient the MST,
/// synthesize rules, and assign aggregation roles.
pub fn plan_request(t: &Topology, req: &UserRequest) -> Result<DatapathPlan, RequestError> {
    req.validate()?;
    let coverage = resolve_coverage(t, &req.coverage)?;
    let mst = compute_mst(t)?;

    let root = match &req.root_hint {
        Some(hint) => t
            .root_switch_for(hint)
            .ok_or_else(|| RequestError::UnknownStation(hint.clone()))?,
        None => auto_root(t, &mst, &coverage),
    };

    let tree = orient_tree(t, &mst, &root)?;
    let rules = synthesize_rules(t, &tree)?;

    let mut roles: BTreeMap<NodeId, AggRole> = BTreeMap::new();
    for station in &coverage {
        roles.insert(station.clone(), AggRole::Leaf);
        let path = tree_path(&tree, station, &root)?;
        for interior in &path[1..] {
            roles.entry(interior.clone()).or_insert(AggRole::Combiner);
        }
    }
    roles.insert(root.clone(), AggRole::Root);

    Ok(DatapathPlan {
        request: req.clone(),
        coverage,
        root,
        tree,
        rules,
        agg: AggregationPlan { roles },
    })
}

/// Per-link one-way latency in milliseconds, keyed by unordered node pair.
/// Unlisted links cost 0.
#[derive(Clone, Debug, Default)]
pub struct LatencyMap {
    map: BTreeMap<(NodeId, NodeId), f64>,
}

impl LatencyMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, a: impl Into<NodeId>, b: impl Into<NodeId>, ms: f64) {
        let (a, b) = (a.into(), b.into());
        let key = if a <= b { (a, b) } else { (b, a) };
        self.map.insert(key, ms);
    }

    pub fn get(&self, a: &NodeId, b: &NodeId) -> f64 {
        let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.map.get(&key).copied().unwrap_or(0.0)
    }

    pub fn parse(text: &str) -> Result<Self, RequestError> {
        #[derive(Deserialize)]
        struct LatencyFile {
            latencies: Vec<LatencyEntry>,
        }
        #[derive(Deserialize)]
        struct LatencyEntry {
            a: String,
            b: String,
            ms: f64,
        }
        let file: LatencyFile =
            serde_json::from_str(text).map_err(|e| RequestError::Parse(e.to_string()))?;
        let mut map = LatencyMap::new();
        for entry in file.latencies {
            if entry.ms < 0.0 || !entry.ms.is_finite() {
                return Err(RequestError::Parse(format!(
                    "latency {} -- {}: ms must be nonnegative",
                    entry.a, entry.b
                )));
            }
            map.set(entry.a.as_str(), entry.b.as_str(), entry.ms);
        }
        Ok(map)
    }
}

/// Epoch value per the requested operation.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum EpochValue {
    Aggregate(f64),
    PerStation(Vec<(NodeId, f64)>),
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct EpochResult {
    pub epoch_index: u64,
    pub value: EpochValue,
    pub sum: f64,
    pub count: u64,
    pub arrival_spread_ms: f64,
    pub jitter_ok: bool,
    /// Coverage stations with no reading this epoch (diagnostic, not fatal).
    pub missing: Vec<NodeId>,
}

/// Fold partials up the tree from `node`, merging children before parents.
fn fold_subtree(
    tree: &SpanningTree,
    contributions: &BTreeMap<NodeId, Partial>,
    node: &NodeId,
) -> Partial {
    let own = contributions.get(node).copied().unwrap_or_default();
    tree.children(node)
        .iter()
        .map(|child| fold_subtree(tree, contributions, child))
        .fold(own, combine)
}

/// Buckets readings into epochs, runs the tree fold, and measures the arrival
/// spread at the root. Within an epoch each station contributes its latest
/// reading. Readings of a different data type are ignored.
pub fn simulate_collection(
    plan: &DatapathPlan,
    readings: &[SensorReading],
    latencies: &LatencyMap,
) -> Result<Vec<EpochResult>, RequestError> {
    let coverage: BTreeSet<&NodeId> = plan.coverage.iter().collect();
    let epoch_ms = plan.request.interval_s * 1000.0;

    let mut epochs: BTreeMap<u64, BTreeMap<NodeId, SensorReading>> = BTreeMap::new();
    for reading in readings {
        if reading.data_type != plan.request.data_type {
            continue;
        }
        if !coverage.contains(&reading.station) {
            return Err(RequestError::StationOutsideCoverage(reading.station.clone()));
        }
        let epoch = (reading.timestamp_ms as f64 / epoch_ms).floor() as u64;
        let slot = epochs.entry(epoch).or_default();
        // latest reading wins within the epoch
        match slot.get(&reading.station) {
            Some(prev) if prev.timestamp_ms > reading.timestamp_ms => {}
            _ => {
                slot.insert(reading.station.clone(), reading.clone());
            }
        }
    }

    let mut path_latency: BTreeMap<&NodeId, f64> = BTreeMap::new();
    for station in &plan.coverage {
        let path = tree_path(&plan.tree, station, &plan.root)?;
        let ms = path.windows(2).map(|pair| latencies.get(&pair[0], &pair[1])).sum();
        path_latency.insert(station, ms);
    }

    let mut results = Vec::new();
    for (epoch_index, slot) in epochs {
        let contributions: BTreeMap<NodeId, Partial> = slot
            .iter()
            .map(|(station, reading)| {
                (station.clone(), Partial { sum: reading.value, count: 1 })
            })
            .collect();
        let total = fold_subtree(&plan.tree, &contributions, &plan.root);

        let arrivals: Vec<f64> = slot
            .iter()
            .map(|(station, reading)| reading.timestamp_ms as f64 + path_latency[station])
            .collect();
        let spread = match (
            arrivals.iter().cloned().reduce(f64::max),
            arrivals.iter().cloned().reduce(f64::min),
        ) {
            (Some(max), Some(min)) => max - min,
            _ => 0.0,
        };

        let value = match plan.request.operation {
            AggOperation::Sum => EpochValue::Aggregate(total.sum),
            AggOperation::Average => EpochValue::Aggregate(total.sum / total.count as f64),
            AggOperation::None => EpochValue::PerStation(
                slot.iter().map(|(station, r)| (station.clone(), r.value)).collect(),
            ),
        };
        let missing: Vec<NodeId> = plan
            .coverage
            .iter()
            .filter(|station| !slot.contains_key(*station))
            .cloned()
            .collect();

        results.push(EpochResult {
            epoch_index,
            value,
            sum: total.sum,
            count: total.count,
            arrival_spread_ms: spread,
            jitter_ok: spread <= plan.request.jitter_bound_ms,
            missing,
        });
    }
    Ok(results)
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct StationRate {
    pub station: NodeId,
    pub observed_hz: f64,
    pub expected_hz: f64,
    pub flagged: bool,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct RateReport {
    pub tolerance: f64,
    pub window_s: f64,
    pub per_station: Vec<StationRate>,
}

impl RateReport {
    pub fn flagged(&self) -> impl Iterator<Item = &StationRate> {
        self.per_station.iter().filter(|r| r.flagged)
    }
}

/// Observed readings/second per station over the whole epochs spanned by the
/// readings; stations deviating from the requested rate by more than
/// `tolerance` (fraction, default 0.1) are flagged.
pub fn verify_rate(plan: &DatapathPlan, readings: &[SensorReading], tolerance: f64) -> RateReport {
    let epoch_ms = plan.request.interval_s * 1000.0;
    let relevant: Vec<&SensorReading> = readings
        .iter()
        .filter(|r| r.data_type == plan.request.data_type)
        .collect();
    let window_s = match (
        relevant.iter().map(|r| r.timestamp_ms).min(),
        relevant.iter().map(|r| r.timestamp_ms).max(),
    ) {
        (Some(lo), Some(hi)) => {
            let lo_epoch = (lo as f64 / epoch_ms).floor();
            let hi_epoch = (hi as f64 / epoch_ms).floor();
            (hi_epoch - lo_epoch + 1.0) * plan.request.interval_s
        }
        _ => plan.request.interval_s,
    };

    let mut counts: BTreeMap<&NodeId, u64> = plan.coverage.iter().map(|s| (s, 0)).collect();
    for reading in &relevant {
        if let Some(count) = counts.get_mut(&reading.station) {
            *count += 1;
        }
    }

    let per_station = plan
        .coverage
        .iter()
        .map(|station| {
            let observed_hz = counts[station] as f64 / window_s;
            let flagged =
                (observed_hz - plan.request.rate_hz).abs() > tolerance * plan.request.rate_hz;
            StationRate {
                station: station.clone(),
                observed_hz,
                expected_hz: plan.request.rate_hz,
                flagged,
            }
        })
        .collect();

    RateReport { tolerance, window_s, per_station }
}

/// Full collection report as written by the CLI.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct CollectionReport {
    pub root: NodeId,
    pub coverage: Vec<NodeId>,
    pub tree_edges: Vec<(NodeId, NodeId)>,
    pub epochs: Vec<EpochResult>,
    pub rates: RateReport,
}

impl CollectionReport {
    pub fn build(plan: &DatapathPlan, epochs: Vec<EpochResult>, rates: RateReport) -> Self {
        let mut tree_edges: Vec<(NodeId, NodeId)> = plan
            .tree
            .nodes()
            .filter_map(|n| plan.tree.parent(n).map(|pl| (n.clone(), pl.parent.clone())))
            .collect();
        tree_edges.sort();
        CollectionReport {
            root: plan.root.clone(),
            coverage: plan.coverage.clone(),
            tree_edges,
            epochs,
            rates,
        }
    }

    pub fn jitter_ok(&self) -> bool {
        self.epochs.iter().all(|e| e.jitter_ok)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization");
        out.push('\n');
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "root: {}", self.root);
        let coverage: Vec<&str> = self.coverage.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(out, "coverage: {}", coverage.join(","));
        for (child, parent) in &self.tree_edges {
            let _ = writeln!(out, "tree: {child} -> {parent}");
        }
        for epoch in &self.epochs {
            let value = match &epoch.value {
                EpochValue::Aggregate(v) => format!("{v}"),
                EpochValue::PerStation(values) => values
                    .iter()
                    .map(|(s, v)| format!("{s}={v}"))
                    .collect::<Vec<_>>()
                    .join(","),
            };
            let _ = write!(
                out,
                "epoch {}: value={value} count={} spread_ms={} jitter_ok={}",
                epoch.epoch_index, epoch.count, epoch.arrival_spread_ms, epoch.jitter_ok
            );
            if epoch.missing.is_empty() {
                out.push('\n');
            } else {
                let missing: Vec<&str> = epoch.missing.iter().map(|s| s.as_str()).collect();
                let _ = writeln!(out, " missing={}", missing.join(","));
            }
        }
        for rate in &self.rates.per_station {
            let _ = writeln!(
                out,
                "rate {}: observed={:.6}Hz expected={:.6}Hz{}",
                rate.station,
                rate.observed_hz,
                rate.expected_hz,
                if rate.flagged { " FLAGGED" } else { "" }
            );
        }
        out
    }
}
