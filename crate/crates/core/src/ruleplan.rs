//! Per-switch LPM flow rules realizing tree routing, the `<switch>-runtime.json`
//! file format, and minimal rule diffs between plans.
//!
//! The runtime file is a JSON array of entry objects with exactly the keys
//! `table`, `match`, `action_name`, `action_params` in that order; `match`
//! maps `hdr.ipv4.dstAddr` to `[address, prefix_len]` and forward params are a
//! lowercase colon-hex `dstAddr` plus an integer `port`. [`serialize_runtime`]
//! emits this byte-exactly (2-space indent, trailing newline) so golden-file
//! tests are stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::mst::{tree_path, MstError, SpanningTree};
use crate::topology::{MacAddr, NodeId, Topology};

pub const IPV4_LPM_TABLE: &str = "MyIngress.ipv4_lpm";
pub const DST_ADDR_FIELD: &str = "hdr.ipv4.dstAddr";
pub const FORWARD_ACTION: &str = "MyIngress.ipv4_forward";
pub const DROP_ACTION: &str = "MyIngress.drop";
pub const NO_ACTION: &str = "NoAction";

#[derive(Debug, Error)]
pub enum RulePlanError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("unknown switch {0}")]
    UnknownSwitch(NodeId),
    #[error("host {0} is not in the spanning tree")]
    UnreachableHost(NodeId),
    #[error("invalid prefix length {0} (must be 0..=32)")]
    InvalidPrefixLen(u8),
    #[error("invalid delta: {0}")]
    BadDelta(String),
    #[error(transparent)]
    Mst(#[from] MstError),
}

/// LPM match key on the destination address. The address is stored normalized
/// (no set bits beyond the prefix), so equal keys compare equal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LpmKey {
    addr: Ipv4Addr,
    prefix_len: u8,
}

impl LpmKey {
    pub fn new(addr: Ipv4Addr, prefix_len: u8) -> Result<Self, RulePlanError> {
        if prefix_len > 32 {
            return Err(RulePlanError::InvalidPrefixLen(prefix_len));
        }
        let bits = u32::from(addr) & Self::mask(prefix_len);
        Ok(LpmKey { addr: Ipv4Addr::from(bits), prefix_len })
    }

    /// Exact-host /32 key.
    pub fn host(addr: Ipv4Addr) -> Self {
        LpmKey { addr, prefix_len: 32 }
    }

    pub fn addr(&self) -> Ipv4Addr {
        self.addr
    }

    pub fn prefix_len(&self) -> u8 {
        self.prefix_len
    }

    pub fn contains(&self, ip: Ipv4Addr) -> bool {
        u32::from(ip) & Self::mask(self.prefix_len) == u32::from(self.addr)
    }

    fn mask(prefix_len: u8) -> u32 {
        if prefix_len == 0 {
            0
        } else {
            u32::MAX << (32 - prefix_len)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TableAction {
    Forward { dst_mac: MacAddr, port: u32 },
    Drop,
    NoAction,
}

impl TableAction {
    pub fn name(&self) -> &'static str {
        match self {
            TableAction::Forward { .. } => FORWARD_ACTION,
            TableAction::Drop => DROP_ACTION,
            TableAction::NoAction => NO_ACTION,
        }
    }
}

/// One match-action rule of the `ipv4_lpm` table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TableEntry {
    pub key: LpmKey,
    pub action: TableAction,
}

impl TableEntry {
    pub fn forward(key: LpmKey, dst_mac: MacAddr, port: u32) -> Self {
        TableEntry { key, action: TableAction::Forward { dst_mac, port } }
    }
}

// Reports serialize entries in the same object shape as runtime files.
impl Serialize for TableEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct MatchField<'a>(&'a LpmKey);
        impl Serialize for MatchField<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry(
                    DST_ADDR_FIELD,
                    &(self.0.addr().to_string(), self.0.prefix_len()),
                )?;
                m.end()
            }
        }

        struct Params<'a>(&'a TableAction);
        impl Serialize for Params<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                match self.0 {
                    TableAction::Forward { dst_mac, port } => {
                        let mut m = serializer.serialize_map(Some(2))?;
                        m.serialize_entry("dstAddr", &dst_mac.to_string())?;
                        m.serialize_entry("port", port)?;
                        m.end()
                    }
                    TableAction::Drop | TableAction::NoAction => {
                        serializer.serialize_map(Some(0))?.end()
                    }
                }
            }
        }

        let mut s = serializer.serialize_struct("TableEntry", 4)?;
        s.serialize_field("table", IPV4_LPM_TABLE)?;
        s.serialize_field("match", &MatchField(&self.key))?;
        s.serialize_field("action_name", self.action.name())?;
        s.serialize_field("action_params", &Params(&self.action))?;
        s.end()
    }
}

/// Table entries per switch; entries are kept sorted by key so plans compare
/// structurally and serialization order is canonical.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct RulePlan {
    per_switch: BTreeMap<NodeId, Vec<TableEntry>>,
}

impl RulePlan {
    pub fn new(per_switch: BTreeMap<NodeId, Vec<TableEntry>>) -> Self {
        let mut plan = RulePlan { per_switch };
        for entries in plan.per_switch.values_mut() {
            entries.sort_by_key(|e| e.key);
        }
        plan
    }

    pub fn switches(&self) -> impl Iterator<Item = &NodeId> {
        self.per_switch.keys()
    }

    pub fn entries(&self, switch: &NodeId) -> Option<&[TableEntry]> {
        self.per_switch.get(switch).map(|v| v.as_slice())
    }

    pub fn per_switch(&self) -> &BTreeMap<NodeId, Vec<TableEntry>> {
        &self.per_switch
    }

    pub fn entry_count(&self) -> usize {
        self.per_switch.values().map(|v| v.len()).sum()
    }
}

/// One /32 forward entry per (switch, host): the egress port is the first hop
/// of `tree_path(switch, host)` and the MAC is the next hop's receiving MAC.
pub fn synthesize_rules(t: &Topology, tree: &SpanningTree) -> Result<RulePlan, RulePlanError> {
    let mut per_switch = BTreeMap::new();
    for switch in t.switches() {
        let mut entries = Vec::new();
        for host in t.hosts() {
            if !tree.contains(&host.id) {
                return Err(RulePlanError::UnreachableHost(host.id.clone()));
            }
            let path = tree_path(tree, &switch.id, &host.id)?;
            let next = &path[1];
            let (egress_port, far_port) = tree
                .edge_ports(&switch.id, next)
                .expect("consecutive path nodes share a tree edge");
            let dst_mac = t
                .receiving_mac(&crate::topology::PortRef::new(next.clone(), far_port))
                .expect("validated topology has a MAC behind every linked port");
            entries.push(TableEntry::forward(
                LpmKey::host(host.host_ipv4().unwrap()),
                dst_mac,
                egress_port,
            ));
        }
        entries.sort_by_key(|e| e.key);
        per_switch.insert(switch.id.clone(), entries);
    }
    Ok(RulePlan { per_switch })
}

/// Byte-exact `<switch>-runtime.json` document for one switch.
pub fn serialize_runtime(plan: &RulePlan, switch: &NodeId) -> Result<String, RulePlanError> {
    let entries = plan
        .entries(switch)
        .ok_or_else(|| RulePlanError::UnknownSwitch(switch.clone()))?;
    Ok(serialize_entries(entries))
}

/// Renders a table in the runtime-file format.
pub fn serialize_entries(entries: &[TableEntry]) -> String {
    if entries.is_empty() {
        return "[]\n".to_string();
    }
    let mut out = String::from("[\n");
    for (i, entry) in entries.iter().enumerate() {
        out.push_str("  {\n");
        let _ = writeln!(out, "    \"table\": \"{IPV4_LPM_TABLE}\",");
        out.push_str("    \"match\": {\n");
        let _ = writeln!(
            out,
            "      \"{DST_ADDR_FIELD}\": [\"{}\", {}]",
            entry.key.addr(),
            entry.key.prefix_len()
        );
        out.push_str("    },\n");
        let _ = writeln!(out, "    \"action_name\": \"{}\",", entry.action.name());
        match entry.action {
            TableAction::Forward { dst_mac, port } => {
                out.push_str("    \"action_params\": {\n");
                let _ = writeln!(out, "      \"dstAddr\": \"{dst_mac}\",");
                let _ = writeln!(out, "      \"port\": {port}");
                out.push_str("    }\n");
            }
            TableAction::Drop | TableAction::NoAction => {
                out.push_str("    \"action_params\": {}\n");
            }
        }
        out.push_str(if i + 1 == entries.len() { "  }\n" } else { "  },\n" });
    }
    out.push_str("]\n");
    out
}

#[derive(Deserialize)]
struct RawEntry {
    table: String,
    #[serde(rename = "match")]
    match_fields: BTreeMap<String, (String, u8)>,
    action_name: String,
    #[serde(default)]
    action_params: BTreeMap<String, serde_json::Value>,
}

fn entry_from_raw(raw: RawEntry) -> Result<TableEntry, RulePlanError> {
    if raw.table != IPV4_LPM_TABLE {
        return Err(RulePlanError::Parse(format!(
            "unknown table {:?} (expected {IPV4_LPM_TABLE:?})",
            raw.table
        )));
    }
    if raw.match_fields.len() != 1 || !raw.match_fields.contains_key(DST_ADDR_FIELD) {
        return Err(RulePlanError::Parse(format!(
            "match must contain exactly the field {DST_ADDR_FIELD:?}"
        )));
    }
    let (addr, prefix_len) = &raw.match_fields[DST_ADDR_FIELD];
    let addr: Ipv4Addr = addr
        .parse()
        .map_err(|e| RulePlanError::Parse(format!("bad match address {addr:?}: {e}")))?;
    let key = LpmKey::new(addr, *prefix_len)?;

    let action = match raw.action_name.as_str() {
        FORWARD_ACTION => {
            let dst_mac = raw
                .action_params
                .get("dstAddr")
                .and_then(|v| v.as_str())
                .ok_or_else(|| RulePlanError::Parse("forward entry missing string dstAddr".into()))?
                .parse::<MacAddr>()
                .map_err(RulePlanError::Parse)?;
            let port = raw
                .action_params
                .get("port")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| RulePlanError::Parse("forward entry missing integer port".into()))?;
            let port = u32::try_from(port)
                .map_err(|_| RulePlanError::Parse(format!("port {port} out of range")))?;
            TableAction::Forward { dst_mac, port }
        }
        DROP_ACTION | NO_ACTION => {
            if !raw.action_params.is_empty() {
                return Err(RulePlanError::Parse(format!(
                    "action {} carries no params",
                    raw.action_name
                )));
            }
            if raw.action_name == DROP_ACTION {
                TableAction::Drop
            } else {
                TableAction::NoAction
            }
        }
        other => return Err(RulePlanError::UnknownAction(other.to_string())),
    };
    Ok(TableEntry { key, action })
}

/// Parses a runtime document back into table entries.
pub fn parse_runtime(doc: &str) -> Result<Vec<TableEntry>, RulePlanError> {
    let raw: Vec<RawEntry> =
        serde_json::from_str(doc).map_err(|e| RulePlanError::Parse(e.to_string()))?;
    raw.into_iter().map(entry_from_raw).collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    Insert,
    Modify,
    Delete,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct DeltaOp {
    pub kind: DeltaKind,
    pub switch: NodeId,
    pub entry: TableEntry,
}

/// Ordered edit script between two plans; applying it to the old plan yields
/// the new plan exactly, and it never touches an unchanged entry.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct RuleDelta {
    pub ops: Vec<DeltaOp>,
}

impl RuleDelta {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }
}

/// Key-wise diff: Delete for keys only in `old`, Modify for keys whose action
/// changed, Insert for keys only in `new`. Per switch (name order) ops are
/// emitted deletes, then modifies, then inserts, each sorted by key.
pub fn diff_rules(old: &RulePlan, new: &RulePlan) -> RuleDelta {
    let mut ops = Vec::new();
    let switches: std::collections::BTreeSet<&NodeId> =
        old.switches().chain(new.switches()).collect();
    let empty: &[TableEntry] = &[];
    for switch in switches {
        let old_entries: BTreeMap<LpmKey, &TableEntry> = old
            .entries(switch)
            .unwrap_or(empty)
            .iter()
            .map(|e| (e.key, e))
            .collect();
        let new_entries: BTreeMap<LpmKey, &TableEntry> = new
            .entries(switch)
            .unwrap_or(empty)
            .iter()
            .map(|e| (e.key, e))
            .collect();

        for (key, entry) in &old_entries {
            if !new_entries.contains_key(key) {
                ops.push(DeltaOp {
                    kind: DeltaKind::Delete,
                    switch: switch.clone(),
                    entry: (*entry).clone(),
                });
            }
        }
        for (key, entry) in &new_entries {
            if old_entries.get(key).is_some_and(|old| old.action != entry.action) {
                ops.push(DeltaOp {
                    kind: DeltaKind::Modify,
                    switch: switch.clone(),
                    entry: (*entry).clone(),
                });
            }
        }
        for (key, entry) in &new_entries {
            if !old_entries.contains_key(key) {
                ops.push(DeltaOp {
                    kind: DeltaKind::Insert,
                    switch: switch.clone(),
                    entry: (*entry).clone(),
                });
            }
        }
    }
    RuleDelta { ops }
}

/// Applies a delta, checking the op invariants (Insert key absent,
/// Modify/Delete key present).
pub fn apply_delta(plan: &RulePlan, delta: &RuleDelta) -> Result<RulePlan, RulePlanError> {
    let mut per_switch = plan.per_switch.clone();
    for op in &delta.ops {
        let table = per_switch.entry(op.switch.clone()).or_default();
        let pos = table.iter().position(|e| e.key == op.entry.key);
        match (op.kind, pos) {
            (DeltaKind::Insert, None) => {
                let at = table.partition_point(|e| e.key < op.entry.key);
                table.insert(at, op.entry.clone());
            }
            (DeltaKind::Insert, Some(_)) => {
                return Err(RulePlanError::BadDelta(format!(
                    "insert of existing key {}/{} on {}",
                    op.entry.key.addr(),
                    op.entry.key.prefix_len(),
                    op.switch
                )));
            }
            (DeltaKind::Modify, Some(i)) => table[i] = op.entry.clone(),
            (DeltaKind::Delete, Some(i)) => {
                table.remove(i);
            }
            (DeltaKind::Modify | DeltaKind::Delete, None) => {
                return Err(RulePlanError::BadDelta(format!(
                    "{:?} of absent key {}/{} on {}",
                    op.kind,
                    op.entry.key.addr(),
                    op.entry.key.prefix_len(),
                    op.switch
                )));
            }
        }
    }
    Ok(RulePlan { per_switch })
}
