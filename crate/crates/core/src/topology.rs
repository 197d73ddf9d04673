//! Network model: switches, hosts/base stations, ports, weighted links, and
//! the JSON topology file format.
//!
//! A [`Topology`] is immutable after construction. Every constructor path
//! (including [`load_topology`]) runs the full invariant check, so downstream
//! code can rely on: unique node names, unique host IPv4 addresses, a MAC on
//! every linked switch port, hosts attached by exactly one link to a switch,
//! no reused `(node, port)` pairs, and a connected graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    /// The file is not syntactically valid for the topology schema.
    #[error("parse error: {0}")]
    Parse(String),
    /// The file parsed but violates a topology invariant; the message names
    /// the first violated invariant.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// Short string identifier of a node, e.g. `s1` or `h1`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({})", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// 48-bit MAC address, displayed as lowercase colon-separated hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacAddr([u8; 6]);

impl MacAddr {
    pub const fn new(octets: [u8; 6]) -> Self {
        MacAddr(octets)
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MacAddr({})", self)
    }
}

impl FromStr for MacAddr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 6 {
            return Err(format!("invalid MAC address {s:?}: expected 6 colon-separated octets"));
        }
        let mut octets = [0u8; 6];
        for (i, part) in parts.iter().enumerate() {
            if part.len() != 2 {
                return Err(format!("invalid MAC address {s:?}: octet {part:?} is not 2 hex digits"));
            }
            octets[i] = u8::from_str_radix(part, 16)
                .map_err(|_| format!("invalid MAC address {s:?}: bad hex octet {part:?}"))?;
        }
        Ok(MacAddr(octets))
    }
}

impl Serialize for MacAddr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MacAddr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Exact positive rational link cost.
///
/// Weights are compared exactly (never as floats) so MST tie-breaking is
/// reproducible. In topology files a weight may be written as a JSON integer,
/// a JSON decimal (converted exactly; every finite double is a dyadic
/// rational), or a string `"p/q"`. Serialization emits an integer when the
/// denominator is 1 and `"p/q"` otherwise, so round-trips are always exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Ratio<i128>);

impl Weight {
    pub fn zero() -> Self {
        Weight(Ratio::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Weight(Ratio::from_integer(n as i128))
    }

    /// Returns `None` when `den == 0`.
    pub fn new(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        Some(Weight(Ratio::new(num as i128, den as i128)))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_positive(&self) -> bool {
        self.0 > Ratio::zero()
    }

    /// Exact conversion of a finite double into a rational. Fails only for
    /// magnitudes far outside any plausible link cost.
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Weight::zero());
        }
        let bits = v.to_bits();
        let sign: i128 = if bits >> 63 == 1 { -1 } else { 1 };
        let biased_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if biased_exp == 0 {
            (frac as i128, -1074i32)
        } else {
            ((frac | (1 << 52)) as i128, biased_exp - 1075)
        };
        if !(-64..=64).contains(&exp) {
            return None;
        }
        let ratio = if exp >= 0 {
            Ratio::from_integer(sign * (mantissa << exp))
        } else {
            Ratio::new(sign * mantissa, 1i128 << (-exp))
        };
        Some(Weight(ratio))
    }
}

impl std::ops::Add for Weight {
    type Output = Weight;

    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom() == &1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self)
    }
}

impl FromStr for Weight {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| format!("bad weight numerator in {s:?}"))?;
            let den: i64 = den.trim().parse().map_err(|_| format!("bad weight denominator in {s:?}"))?;
            Weight::new(num, den).ok_or_else(|| format!("zero denominator in weight {s:?}"))
        } else {
            let n: i64 = s.trim().parse().map_err(|_| format!("bad weight {s:?}"))?;
            Ok(Weight::from_int(n))
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.denom() == 1 {
            if let Ok(n) = i64::try_from(self.numer()) {
                return serializer.serialize_i64(n);
            }
        }
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct WeightVisitor;

        impl<'de> serde::de::Visitor<'de> for WeightVisitor {
            type Value = Weight;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a \"p/q\" string")
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Weight, E> {
                Ok(Weight::from_int(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Weight, E> {
                i64::try_from(v)
                    .map(Weight::from_int)
                    .map_err(|_| E::custom(format!("weight {v} out of range")))
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Weight, E> {
                Weight::from_f64_exact(v)
                    .ok_or_else(|| E::custom(format!("weight {v} not exactly representable; use a \"p/q\" string")))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Weight, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(WeightVisitor)
    }
}

/// One end of a link: a node plus a positive port number on that node.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct PortRef {
    pub node: NodeId,
    pub port: u32,
}

impl PortRef {
    pub fn new(node: impl Into<NodeId>, port: u32) -> Self {
        PortRef { node: node.into(), port }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.node, self.port)
    }
}

/// Undirected weighted link. Stored in canonical form: endpoint `a` sorts
/// before endpoint `b`, so structural equality is endpoint-order independent.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct Link {
    pub a: PortRef,
    pub b: PortRef,
    pub weight: Weight,
}

impl Link {
    pub fn new(a: PortRef, b: PortRef, weight: Weight) -> Self {
        if (&b.node, b.port) < (&a.node, a.port) {
            Link { a: b, b: a, weight }
        } else {
            Link { a, b, weight }
        }
    }

    pub fn other_end(&self, node: &NodeId) -> Option<&PortRef> {
        if &self.a.node == node {
            Some(&self.b)
        } else if &self.b.node == node {
            Some(&self.a)
        } else {
            None
        }
    }

    pub fn end_at(&self, node: &NodeId) -> Option<&PortRef> {
        if &self.a.node == node {
            Some(&self.a)
        } else if &self.b.node == node {
            Some(&self.b)
        } else {
            None
        }
    }

    pub fn connects(&self, x: &NodeId, y: &NodeId) -> bool {
        (&self.a.node == x && &self.b.node == y) || (&self.a.node == y && &self.b.node == x)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum NodeKind {
    Host {
        ipv4: Ipv4Addr,
        mac: MacAddr,
    },
    Switch {
        /// MAC of each port; present for every port that appears in a link.
        port_macs: BTreeMap<u32, MacAddr>,
    },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Node {
    pub id: NodeId,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl Node {
    pub fn host(id: impl Into<NodeId>, ipv4: Ipv4Addr, mac: MacAddr) -> Self {
        Node { id: id.into(), kind: NodeKind::Host { ipv4, mac } }
    }

    pub fn switch(id: impl Into<NodeId>, port_macs: BTreeMap<u32, MacAddr>) -> Self {
        Node { id: id.into(), kind: NodeKind::Switch { port_macs } }
    }

    pub fn is_host(&self) -> bool {
        matches!(self.kind, NodeKind::Host { .. })
    }

    pub fn is_switch(&self) -> bool {
        matches!(self.kind, NodeKind::Switch { .. })
    }

    pub fn host_ipv4(&self) -> Option<Ipv4Addr> {
        match &self.kind {
            NodeKind::Host { ipv4, .. } => Some(*ipv4),
            NodeKind::Switch { .. } => None,
        }
    }

    pub fn host_mac(&self) -> Option<MacAddr> {
        match &self.kind {
            NodeKind::Host { mac, .. } => Some(*mac),
            NodeKind::Switch { .. } => None,
        }
    }

    pub fn port_mac(&self, port: u32) -> Option<MacAddr> {
        match &self.kind {
            NodeKind::Switch { port_macs } => port_macs.get(&port).copied(),
            NodeKind::Host { .. } => None,
        }
    }
}

/// One incident link as seen from a node, in `neighbors()` order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NeighborEntry {
    pub local: PortRef,
    pub remote: PortRef,
    pub weight: Weight,
}

/// Where a host hangs off the switch fabric.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HostAttachment {
    pub host_port: u32,
    pub switch: NodeId,
    pub switch_port: u32,
}

/// Validated, immutable network graph.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Topology {
    nodes: BTreeMap<NodeId, Node>,
    links: Vec<Link>,
    groups: BTreeMap<String, Vec<NodeId>>,
}

impl Topology {
    /// Builds a topology, checking every invariant. Links are canonicalized
    /// and sorted; group member lists are sorted and deduplicated.
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<Link>,
        groups: BTreeMap<String, Vec<NodeId>>,
    ) -> Result<Self, TopologyError> {
        let mut node_map = BTreeMap::new();
        for node in nodes {
            if node.id.as_str().is_empty() {
                return Err(TopologyError::Validation("empty node name".into()));
            }
            if node_map.insert(node.id.clone(), node.clone()).is_some() {
                return Err(TopologyError::Validation(format!("duplicate node name {}", node.id)));
            }
        }

        let mut seen_ips: BTreeMap<Ipv4Addr, NodeId> = BTreeMap::new();
        for node in node_map.values() {
            if let NodeKind::Host { ipv4, .. } = &node.kind {
                if let Some(prev) = seen_ips.insert(*ipv4, node.id.clone()) {
                    return Err(TopologyError::Validation(format!(
                        "duplicate IPv4 {ipv4} on hosts {prev} and {}",
                        node.id
                    )));
                }
            }
        }

        let mut links: Vec<Link> = links
            .into_iter()
            .map(|l| Link::new(l.a, l.b, l.weight))
            .collect();
        links.sort();

        let mut used_ports: BTreeSet<(NodeId, u32)> = BTreeSet::new();
        for link in &links {
            if link.a.node == link.b.node {
                return Err(TopologyError::Validation(format!("self-loop at {}", link.a.node)));
            }
            if !link.weight.is_positive() {
                return Err(TopologyError::Validation(format!(
                    "non-positive weight {} on link {} -- {}",
                    link.weight, link.a, link.b
                )));
            }
            for end in [&link.a, &link.b] {
                if end.port == 0 {
                    return Err(TopologyError::Validation(format!("port 0 at {} (ports start at 1)", end.node)));
                }
                let node = node_map.get(&end.node).ok_or_else(|| {
                    TopologyError::Validation(format!("link references unknown node {}", end.node))
                })?;
                if !used_ports.insert((end.node.clone(), end.port)) {
                    return Err(TopologyError::Validation(format!("port {} reused", end)));
                }
                if node.is_switch() && node.port_mac(end.port).is_none() {
                    return Err(TopologyError::Validation(format!(
                        "switch {} has no MAC for linked port {}",
                        end.node, end.port
                    )));
                }
            }
        }

        for node in node_map.values() {
            if node.is_host() {
                let degree = links.iter().filter(|l| l.end_at(&node.id).is_some()).count();
                if degree != 1 {
                    return Err(TopologyError::Validation(format!(
                        "host {} has {degree} links (must attach by exactly one)",
                        node.id
                    )));
                }
                let link = links.iter().find(|l| l.end_at(&node.id).is_some()).unwrap();
                let peer = link.other_end(&node.id).unwrap();
                if !node_map[&peer.node].is_switch() {
                    return Err(TopologyError::Validation(format!(
                        "host {} attaches to non-switch {}",
                        node.id, peer.node
                    )));
                }
            }
        }

        if !node_map.is_empty() {
            let start = node_map.keys().next().unwrap().clone();
            let mut seen = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([start]);
            while let Some(cur) = queue.pop_front() {
                for link in &links {
                    if let Some(peer) = link.other_end(&cur) {
                        if seen.insert(peer.node.clone()) {
                            queue.push_back(peer.node.clone());
                        }
                    }
                }
            }
            if let Some(unreached) = node_map.keys().find(|id| !seen.contains(*id)) {
                return Err(TopologyError::Validation(format!(
                    "DisconnectedGraph: node {unreached} unreachable from {}",
                    node_map.keys().next().unwrap()
                )));
            }
        }

        let mut clean_groups = BTreeMap::new();
        for (name, members) in groups {
            if name.is_empty() {
                return Err(TopologyError::Validation("empty group name".into()));
            }
            let mut members: Vec<NodeId> = members;
            members.sort();
            members.dedup();
            for member in &members {
                let node = node_map.get(member).ok_or_else(|| {
                    TopologyError::Validation(format!("group {name:?} references unknown node {member}"))
                })?;
                if !node.is_host() {
                    return Err(TopologyError::Validation(format!(
                        "group {name:?} member {member} is not a host"
                    )));
                }
            }
            clean_groups.insert(name, members);
        }

        Ok(Topology { nodes: node_map, links, groups: clean_groups })
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn switches(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(|n| n.is_switch())
    }

    pub fn hosts(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(|n| n.is_host())
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn group(&self, name: &str) -> Option<&[NodeId]> {
        self.groups.get(name).map(|v| v.as_slice())
    }

    pub fn groups(&self) -> &BTreeMap<String, Vec<NodeId>> {
        &self.groups
    }

    /// Incident links of `n`, sorted by local port number.
    pub fn neighbors(&self, n: &NodeId) -> Result<Vec<NeighborEntry>, TopologyError> {
        if !self.nodes.contains_key(n) {
            return Err(TopologyError::UnknownNode(n.clone()));
        }
        let mut entries: Vec<NeighborEntry> = self
            .links
            .iter()
            .filter_map(|l| {
                let local = l.end_at(n)?;
                let remote = l.other_end(n)?;
                Some(NeighborEntry { local: local.clone(), remote: remote.clone(), weight: l.weight })
            })
            .collect();
        entries.sort_by_key(|e| e.local.port);
        Ok(entries)
    }

    pub fn link_at(&self, node: &NodeId, port: u32) -> Option<&Link> {
        self.links
            .iter()
            .find(|l| l.end_at(node).is_some_and(|e| e.port == port))
    }

    /// Ports of `node` that appear in links, ascending.
    pub fn linked_ports(&self, node: &NodeId) -> Vec<u32> {
        let mut ports: Vec<u32> = self
            .links
            .iter()
            .filter_map(|l| l.end_at(node).map(|e| e.port))
            .collect();
        ports.sort_unstable();
        ports
    }

    pub fn host_attachment(&self, host: &NodeId) -> Option<HostAttachment> {
        let node = self.nodes.get(host)?;
        if !node.is_host() {
            return None;
        }
        let link = self.links.iter().find(|l| l.end_at(host).is_some())?;
        let local = link.end_at(host)?;
        let remote = link.other_end(host)?;
        Some(HostAttachment {
            host_port: local.port,
            switch: remote.node.clone(),
            switch_port: remote.port,
        })
    }

    /// Resolves a collection root: a switch maps to itself, a host to its
    /// attachment switch.
    pub fn root_switch_for(&self, n: &NodeId) -> Option<NodeId> {
        let node = self.nodes.get(n)?;
        if node.is_switch() {
            Some(n.clone())
        } else {
            self.host_attachment(n).map(|a| a.switch)
        }
    }

    /// MAC the device behind `pr` receives frames with: the host MAC for a
    /// host, the per-port MAC for a switch.
    pub fn receiving_mac(&self, pr: &PortRef) -> Option<MacAddr> {
        let node = self.nodes.get(&pr.node)?;
        match &node.kind {
            NodeKind::Host { mac, .. } => Some(*mac),
            NodeKind::Switch { .. } => node.port_mac(pr.port),
        }
    }

    pub fn host_by_ip(&self, ip: Ipv4Addr) -> Option<&Node> {
        self.hosts().find(|h| h.host_ipv4() == Some(ip))
    }

    /// Stable JSON rendering in the topology file schema; reloading it yields
    /// an equal topology.
    pub fn to_json_string(&self) -> String {
        let file = TopologyFile {
            nodes: self
                .nodes
                .values()
                .map(|n| match &n.kind {
                    NodeKind::Host { ipv4, mac } => NodeFile {
                        name: n.id.as_str().to_string(),
                        kind: "host".into(),
                        ipv4: Some(ipv4.to_string()),
                        mac: Some(mac.to_string()),
                        port_macs: None,
                    },
                    NodeKind::Switch { port_macs } => NodeFile {
                        name: n.id.as_str().to_string(),
                        kind: "switch".into(),
                        ipv4: None,
                        mac: None,
                        port_macs: Some(
                            port_macs
                                .iter()
                                .map(|(p, m)| (p.to_string(), m.to_string()))
                                .collect(),
                        ),
                    },
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkFile {
                    a: (l.a.node.as_str().to_string(), l.a.port),
                    b: (l.b.node.as_str().to_string(), l.b.port),
                    weight: Some(l.weight),
                })
                .collect(),
            groups: self
                .groups
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|m| m.as_str().to_string()).collect()))
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("topology serialization");
        out.push('\n');
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    nodes: Vec<NodeFile>,
    links: Vec<LinkFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    groups: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ipv4: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mac: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    port_macs: Option<BTreeMap<String, String>>,
}

#[derive(Serialize, Deserialize)]
struct LinkFile {
    a: (String, u32),
    b: (String, u32),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<Weight>,
}

fn node_from_file(raw: NodeFile) -> Result<Node, TopologyError> {
    let id = NodeId::new(raw.name.clone());
    match raw.kind.as_str() {
        "host" => {
            if raw.port_macs.is_some() {
                return Err(TopologyError::Validation(format!(
                    "host {} must not declare port_macs",
                    raw.name
                )));
            }
            let ipv4: Ipv4Addr = raw
                .ipv4
                .ok_or_else(|| TopologyError::Validation(format!("host {} missing ipv4", raw.name)))?
                .parse()
                .map_err(|e| TopologyError::Parse(format!("host {}: bad ipv4: {e}", raw.name)))?;
            let mac: MacAddr = raw
                .mac
                .ok_or_else(|| TopologyError::Validation(format!("host {} missing mac", raw.name)))?
                .parse()
                .map_err(|e| TopologyError::Parse(format!("host {}: {e}", raw.name)))?;
            Ok(Node::host(id, ipv4, mac))
        }
        "switch" => {
            if raw.ipv4.is_some() || raw.mac.is_some() {
                return Err(TopologyError::Validation(format!(
                    "switch {} must not declare ipv4/mac",
                    raw.name
                )));
            }
            let mut port_macs = BTreeMap::new();
            for (port, mac) in raw.port_macs.unwrap_or_default() {
                let port: u32 = port.parse().map_err(|_| {
                    TopologyError::Parse(format!("switch {}: bad port number {port:?}", raw.name))
                })?;
                if port == 0 {
                    return Err(TopologyError::Validation(format!(
                        "switch {}: port 0 (ports start at 1)",
                        raw.name
                    )));
                }
                let mac: MacAddr = mac
                    .parse()
                    .map_err(|e| TopologyError::Parse(format!("switch {}: {e}", raw.name)))?;
                port_macs.insert(port, mac);
            }
            Ok(Node::switch(id, port_macs))
        }
        other => Err(TopologyError::Parse(format!(
            "node {}: unknown kind {other:?} (expected \"host\" or \"switch\")",
            raw.name
        ))),
    }
}

/// Parses and validates a topology document.
pub fn load_topology_str(text: &str) -> Result<Topology, TopologyError> {
    let file: TopologyFile =
        serde_json::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
    let nodes = file
        .nodes
        .into_iter()
        .map(node_from_file)
        .collect::<Result<Vec<_>, _>>()?;
    let links = file
        .links
        .into_iter()
        .map(|l| {
            Link::new(
                PortRef::new(l.a.0, l.a.1),
                PortRef::new(l.b.0, l.b.1),
                l.weight.unwrap_or_else(|| Weight::from_int(1)),
            )
        })
        .collect();
    let groups = file
        .groups
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(NodeId::new).collect()))
        .collect();
    Topology::new(nodes, links, groups)
}

/// Loads a topology file from disk.
pub fn load_topology(path: &Path) -> Result<Topology, TopologyError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TopologyError::Parse(format!("{}: {e}", path.display())))?;
    load_topology_str(&text)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn mac(s: &str) -> MacAddr {
        s.parse().unwrap()
    }

    /// s1, s2, s3 fully meshed plus h1 on s1.
    pub(crate) fn triangle() -> Topology {
        let port_macs = |idx: u8, ports: &[u32]| -> BTreeMap<u32, MacAddr> {
            ports
                .iter()
                .map(|&p| (p, MacAddr::new([0, 0, 0, idx, idx, p as u8])))
                .collect()
        };
        Topology::new(
            vec![
                Node::host("h1", "10.0.1.1".parse().unwrap(), mac("00:00:00:00:01:01")),
                Node::switch("s1", port_macs(1, &[1, 2, 3])),
                Node::switch("s2", port_macs(2, &[2, 3])),
                Node::switch("s3", port_macs(3, &[2, 3])),
            ],
            vec![
                Link::new(PortRef::new("h1", 1), PortRef::new("s1", 1), Weight::from_int(1)),
                Link::new(PortRef::new("s1", 2), PortRef::new("s2", 2), Weight::from_int(1)),
                Link::new(PortRef::new("s1", 3), PortRef::new("s3", 2), Weight::from_int(2)),
                Link::new(PortRef::new("s2", 3), PortRef::new("s3", 3), Weight::from_int(3)),
            ],
            BTreeMap::new(),
        )
        .unwrap()
    }

    fn fixture_path(name: &str) -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .join(name)
    }

    #[test]
    fn triangle_counts() {
        let t = triangle();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.links().len(), 4);
    }

    #[test]
    fn duplicate_ipv4_rejected() {
        let err = Topology::new(
            vec![
                Node::host("h1", "10.0.1.1".parse().unwrap(), mac("00:00:00:00:01:01")),
                Node::host("h2", "10.0.1.1".parse().unwrap(), mac("00:00:00:00:02:02")),
                Node::switch(
                    "s1",
                    BTreeMap::from([(1, mac("00:00:00:01:01:01")), (2, mac("00:00:00:01:01:02"))]),
                ),
            ],
            vec![
                Link::new(PortRef::new("h1", 1), PortRef::new("s1", 1), Weight::from_int(1)),
                Link::new(PortRef::new("h2", 1), PortRef::new("s1", 2), Weight::from_int(1)),
            ],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate IPv4"), "{err}");
    }

    #[test]
    fn paper_topo_fixture_layout() {
        let t = load_topology(&fixture_path("paper-topo.json")).unwrap();
        let h1 = t.node(&NodeId::new("h1")).unwrap();
        assert_eq!(h1.host_ipv4().unwrap().to_string(), "10.0.1.1");
        assert_eq!(h1.host_mac().unwrap().to_string(), "00:00:00:00:01:01");

        let attach = t.host_attachment(&NodeId::new("h1")).unwrap();
        assert_eq!(attach.switch, NodeId::new("s1"));
        assert_eq!(attach.switch_port, 1);

        // s1 port 3 faces a switch whose receiving MAC is 00:00:00:05:05:02.
        let link = t.link_at(&NodeId::new("s1"), 3).unwrap();
        let far = link.other_end(&NodeId::new("s1")).unwrap();
        assert_eq!(t.receiving_mac(far).unwrap().to_string(), "00:00:00:05:05:02");
    }

    #[test]
    fn neighbors_ordering_and_degree() {
        let t = triangle();
        let h1 = t.neighbors(&NodeId::new("h1")).unwrap();
        assert_eq!(h1.len(), 1);

        let s1 = t.neighbors(&NodeId::new("s1")).unwrap();
        let ports: Vec<u32> = s1.iter().map(|e| e.local.port).collect();
        assert_eq!(ports, vec![1, 2, 3]);
        // Switch-only view: hand-built adjacency s1--s2 (port 2), s1--s3 (port 3).
        assert_eq!(s1[1].remote.node, NodeId::new("s2"));
        assert_eq!(s1[2].remote.node, NodeId::new("s3"));
    }

    #[test]
    fn paper_topo_s1_neighbors() {
        let t = load_topology(&fixture_path("paper-topo.json")).unwrap();
        let entries = t.neighbors(&NodeId::new("s1")).unwrap();
        let by_port: BTreeMap<u32, &NodeId> =
            entries.iter().map(|e| (e.local.port, &e.remote.node)).collect();
        assert_eq!(by_port[&1].as_str(), "h1");
        assert!(t.node(by_port[&3]).unwrap().is_switch());
    }

    #[test]
    fn unknown_node_neighbors() {
        let t = triangle();
        assert!(matches!(
            t.neighbors(&NodeId::new("nope")),
            Err(TopologyError::UnknownNode(_))
        ));
    }

    #[test]
    fn round_trip_fixture() {
        let t = load_topology(&fixture_path("paper-topo.json")).unwrap();
        let again = load_topology_str(&t.to_json_string()).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn weight_exact_decimal() {
        let w: Weight = serde_json::from_str("2.5").unwrap();
        assert_eq!(w, Weight::new(5, 2).unwrap());
        let w: Weight = serde_json::from_str("0.1").unwrap();
        assert_eq!(w, Weight::new(3602879701896397, 36028797018963968).unwrap());
        let w: Weight = serde_json::from_str("\"7/3\"").unwrap();
        assert_eq!(w, Weight::new(7, 3).unwrap());
        assert_eq!(serde_json::to_string(&w).unwrap(), "\"7/3\"");
        assert_eq!(serde_json::to_string(&Weight::from_int(4)).unwrap(), "4");
    }

    #[test]
    fn mac_parse_and_display() {
        let m = mac("00:00:00:05:05:02");
        assert_eq!(m.to_string(), "00:00:00:05:05:02");
        assert!("00:00:00:05:05".parse::<MacAddr>().is_err());
        assert!("00:00:00:05:05:zz".parse::<MacAddr>().is_err());
        assert_eq!(mac("AA:BB:CC:00:00:01").to_string(), "aa:bb:cc:00:00:01");
    }
}
