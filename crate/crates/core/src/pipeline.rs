//! Deterministic match-action switch simulator: parse, LPM lookup, action,
//! plus whole-network packet tracing.
//!
//! One switch traversal is: ingress check for an IPv4 header, longest prefix
//! match on the destination address, then the matched action. Forwarding sets
//! the egress port, rewrites source MAC to the previous destination MAC,
//! rewrites the destination MAC to the action parameter, and decrements TTL —
//! in that order. A TTL that reaches 0 drops the packet; table misses and
//! non-IPv4 packets drop; the hop limit is the topology's node count so
//! forwarding loops surface even with a large initial TTL.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;

use serde::Serialize;
use thiserror::Error;

use crate::ruleplan::{TableAction, TableEntry};
use crate::topology::{MacAddr, NodeId, Topology};

pub const ETHERTYPE_IPV4: u16 = 0x0800;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("packet has no IPv4 header")]
    MissingHeader,
    #[error("{0} is not a host")]
    NotAHost(NodeId),
    #[error("no runtime installed for switch {0}")]
    MissingRuntime(NodeId),
    #[error("HopLimitExceeded: forwarding loop suspected after {hops} hops")]
    HopLimitExceeded { hops: usize, events: Vec<TraceEvent> },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct EthernetHeader {
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub ether_type: u16,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Ipv4Header {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub ttl: u8,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct StandardMetadata {
    pub ingress_port: u32,
    pub egress_spec: Option<u32>,
    pub dropped: bool,
}

/// Structural packet model: typed headers, opaque sensor payload, and the
/// standard metadata the pipeline reads and writes.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct PacketState {
    pub eth: EthernetHeader,
    pub ipv4: Option<Ipv4Header>,
    pub payload: Vec<u8>,
    pub meta: StandardMetadata,
}

impl PacketState {
    pub fn ipv4(
        src_mac: MacAddr,
        dst_mac: MacAddr,
        src: Ipv4Addr,
        dst: Ipv4Addr,
        ttl: u8,
    ) -> Self {
        PacketState {
            eth: EthernetHeader { src_mac, dst_mac, ether_type: ETHERTYPE_IPV4 },
            ipv4: Some(Ipv4Header { src, dst, ttl }),
            payload: Vec::new(),
            meta: StandardMetadata::default(),
        }
    }
}

/// Everything one switch needs to process packets: its table and the name of
/// the pipeline profile installed on it.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SwitchRuntime {
    pub switch: NodeId,
    pub table: Vec<TableEntry>,
    pub pipeline_profile: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NonIpv4,
    TableMiss,
    TtlExpired,
    ActionDrop,
    NoEgress,
    HostMismatch,
    UnlinkedPort,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DropReason::NonIpv4 => "non-ipv4",
            DropReason::TableMiss => "table-miss",
            DropReason::TtlExpired => "ttl-expired",
            DropReason::ActionDrop => "action-drop",
            DropReason::NoEgress => "no-egress",
            DropReason::HostMismatch => "host-mismatch",
            DropReason::UnlinkedPort => "unlinked-port",
        };
        f.write_str(s)
    }
}

/// One step of a packet trace. A completed trace ends in `Dropped` or
/// `Delivered`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TraceEvent {
    Ingress { node: NodeId, port: u32 },
    TableHit { node: NodeId, entry: TableEntry },
    TableMiss { node: NodeId, dst: Ipv4Addr },
    ActionApplied { node: NodeId, action: String, egress: Option<u32>, ttl_after: Option<u8> },
    Dropped { node: NodeId, reason: DropReason },
    Emitted { node: NodeId, port: u32, dst_mac: MacAddr },
    Delivered { host: NodeId, ip: Ipv4Addr },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Ingress { node, port } => write!(f, "ingress {node} port={port}"),
            TraceEvent::TableHit { node, entry } => write!(
                f,
                "table_hit {node} {}/{} -> {}",
                entry.key.addr(),
                entry.key.prefix_len(),
                entry.action.name()
            ),
            TraceEvent::TableMiss { node, dst } => write!(f, "table_miss {node} dst={dst}"),
            TraceEvent::ActionApplied { node, action, egress, ttl_after } => {
                write!(f, "action_applied {node} {action}")?;
                if let Some(p) = egress {
                    write!(f, " egress={p}")?;
                }
                if let Some(t) = ttl_after {
                    write!(f, " ttl={t}")?;
                }
                Ok(())
            }
            TraceEvent::Dropped { node, reason } => write!(f, "dropped {node} reason={reason}"),
            TraceEvent::Emitted { node, port, dst_mac } => {
                write!(f, "emitted {node} port={port} dst_mac={dst_mac}")
            }
            TraceEvent::Delivered { host, ip } => write!(f, "delivered {host} ip={ip}"),
        }
    }
}

/// Full trace of one packet through the network.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct PacketTrace {
    pub events: Vec<TraceEvent>,
}

impl PacketTrace {
    pub fn delivered_at(&self) -> Option<&NodeId> {
        match self.events.last() {
            Some(TraceEvent::Delivered { host, .. }) => Some(host),
            _ => None,
        }
    }

    pub fn drop_reason(&self) -> Option<DropReason> {
        match self.events.last() {
            Some(TraceEvent::Dropped { reason, .. }) => Some(*reason),
            _ => None,
        }
    }

    /// Switches traversed, in order (one per `Ingress` event).
    pub fn switch_sequence(&self) -> Vec<NodeId> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Ingress { node, .. } => Some(node.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Line-oriented rendering: `<step> <kind> <node> <detail>`.
pub fn render_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for (i, event) in events.iter().enumerate() {
        out.push_str(&format!("{i} {event}\n"));
    }
    out
}

/// Longest prefix match: the entry with the longest prefix containing `dst`,
/// or `None` on a miss.
pub fn lpm_lookup(table: &[TableEntry], dst: Ipv4Addr) -> Option<&TableEntry> {
    table
        .iter()
        .filter(|e| e.key.contains(dst))
        .max_by_key(|e| e.key.prefix_len())
}

/// The `ipv4_forward` action, field updates in pipeline statement order.
/// A TTL that reaches 0 marks the packet dropped.
pub fn apply_ipv4_forward(
    mut p: PacketState,
    dst_mac: MacAddr,
    port: u32,
) -> Result<PacketState, PipelineError> {
    let ipv4 = p.ipv4.as_mut().ok_or(PipelineError::MissingHeader)?;
    p.meta.egress_spec = Some(port);
    p.eth.src_mac = p.eth.dst_mac;
    p.eth.dst_mac = dst_mac;
    ipv4.ttl = ipv4.ttl.saturating_sub(1);
    if ipv4.ttl == 0 {
        p.meta.dropped = true;
    }
    Ok(p)
}

/// The `drop` action: mark dropped, headers untouched.
pub fn apply_drop(mut p: PacketState) -> PacketState {
    p.meta.dropped = true;
    p
}

/// One switch traversal: ingress, table lookup, action. All outcomes are
/// values; the trace records each stage and ends in `Dropped` or `Emitted`.
pub fn process_packet(rt: &SwitchRuntime, p: PacketState) -> (PacketState, Vec<TraceEvent>) {
    let node = rt.switch.clone();
    let mut events = vec![TraceEvent::Ingress { node: node.clone(), port: p.meta.ingress_port }];

    if p.eth.ether_type != ETHERTYPE_IPV4 || p.ipv4.is_none() {
        let p = apply_drop(p);
        events.push(TraceEvent::Dropped { node, reason: DropReason::NonIpv4 });
        return (p, events);
    }
    let dst = p.ipv4.as_ref().unwrap().dst;

    let Some(entry) = lpm_lookup(&rt.table, dst) else {
        events.push(TraceEvent::TableMiss { node: node.clone(), dst });
        let p = apply_drop(p);
        events.push(TraceEvent::Dropped { node, reason: DropReason::TableMiss });
        return (p, events);
    };
    let entry = entry.clone();
    events.push(TraceEvent::TableHit { node: node.clone(), entry: entry.clone() });

    match entry.action {
        TableAction::Forward { dst_mac, port } => {
            let p = apply_ipv4_forward(p, dst_mac, port).expect("ipv4 header checked above");
            let ttl_after = p.ipv4.as_ref().map(|h| h.ttl);
            events.push(TraceEvent::ActionApplied {
                node: node.clone(),
                action: entry.action.name().to_string(),
                egress: Some(port),
                ttl_after,
            });
            if p.meta.dropped {
                events.push(TraceEvent::Dropped { node, reason: DropReason::TtlExpired });
            } else {
                events.push(TraceEvent::Emitted { node, port, dst_mac });
            }
            (p, events)
        }
        TableAction::Drop => {
            let p = apply_drop(p);
            events.push(TraceEvent::ActionApplied {
                node: node.clone(),
                action: entry.action.name().to_string(),
                egress: None,
                ttl_after: None,
            });
            events.push(TraceEvent::Dropped { node, reason: DropReason::ActionDrop });
            (p, events)
        }
        TableAction::NoAction => {
            events.push(TraceEvent::ActionApplied {
                node: node.clone(),
                action: entry.action.name().to_string(),
                egress: None,
                ttl_after: None,
            });
            // egress_spec stays unset, so the packet dies at end of pipeline
            let p = apply_drop(p);
            events.push(TraceEvent::Dropped { node, reason: DropReason::NoEgress });
            (p, events)
        }
    }
}

/// Injects a packet at `origin`'s attachment switch and forwards it hop by
/// hop until it is delivered at the host owning `dst_ip` or dropped.
///
/// The hop limit is the topology's node count, independent of TTL; exceeding
/// it returns [`PipelineError::HopLimitExceeded`] carrying the partial trace.
pub fn run_packet(
    t: &Topology,
    runtimes: &BTreeMap<NodeId, SwitchRuntime>,
    origin: &NodeId,
    dst_ip: Ipv4Addr,
    initial_ttl: u8,
) -> Result<PacketTrace, PipelineError> {
    let origin_node = t
        .node(origin)
        .filter(|n| n.is_host())
        .ok_or_else(|| PipelineError::NotAHost(origin.clone()))?;
    for switch in t.switches() {
        if !runtimes.contains_key(&switch.id) {
            return Err(PipelineError::MissingRuntime(switch.id.clone()));
        }
    }
    let attach = t.host_attachment(origin).expect("validated host has one link");
    let ingress_mac = t
        .node(&attach.switch)
        .and_then(|s| s.port_mac(attach.switch_port))
        .expect("validated switch port has a MAC");

    let mut packet = PacketState::ipv4(
        origin_node.host_mac().unwrap(),
        ingress_mac,
        origin_node.host_ipv4().unwrap(),
        dst_ip,
        initial_ttl,
    );
    packet.meta.ingress_port = attach.switch_port;

    let hop_limit = t.node_count();
    let mut events = Vec::new();
    let mut current = attach.switch.clone();
    let mut hops = 0usize;
    loop {
        hops += 1;
        if hops > hop_limit {
            return Err(PipelineError::HopLimitExceeded { hops, events });
        }
        let rt = &runtimes[&current];
        let (next_packet, mut step) = process_packet(rt, packet);
        packet = next_packet;
        events.append(&mut step);
        if packet.meta.dropped {
            return Ok(PacketTrace { events });
        }

        let egress = packet.meta.egress_spec.expect("emitted packet has an egress port");
        let Some(link) = t.link_at(&current, egress) else {
            events.push(TraceEvent::Dropped { node: current, reason: DropReason::UnlinkedPort });
            return Ok(PacketTrace { events });
        };
        let far = link.other_end(&current).unwrap().clone();
        let far_node = t.node(&far.node).unwrap();
        if far_node.is_host() {
            if far_node.host_ipv4() == Some(dst_ip) {
                events.push(TraceEvent::Delivered { host: far.node.clone(), ip: dst_ip });
                return Ok(PacketTrace { events });
            }
            events.push(TraceEvent::Dropped { node: far.node.clone(), reason: DropReason::HostMismatch });
            return Ok(PacketTrace { events });
        }
        packet.meta.ingress_port = far.port;
        packet.meta.egress_spec = None;
        current = far.node;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mst::{compute_mst, orient_tree};
    use crate::ruleplan::{synthesize_rules, LpmKey, RulePlan};
    use crate::topology::{load_topology, NodeId};
    use std::path::PathBuf;

    fn fixture(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
    }

    fn mac(s: &str) -> MacAddr {
        s.parse().unwrap()
    }

    fn ip(s: &str) -> Ipv4Addr {
        s.parse().unwrap()
    }

    fn paper_runtimes() -> (Topology, BTreeMap<NodeId, SwitchRuntime>) {
        let t = load_topology(&fixture("paper-topo.json")).unwrap();
        let tree = orient_tree(&t, &compute_mst(&t).unwrap(), &NodeId::new("h1")).unwrap();
        let plan = synthesize_rules(&t, &tree).unwrap();
        let runtimes = runtimes_from_plan(&plan);
        (t, runtimes)
    }

    fn runtimes_from_plan(plan: &RulePlan) -> BTreeMap<NodeId, SwitchRuntime> {
        plan.per_switch()
            .iter()
            .map(|(id, entries)| {
                (
                    id.clone(),
                    SwitchRuntime {
                        switch: id.clone(),
                        table: entries.clone(),
                        pipeline_profile: "ipv4-mst".into(),
                    },
                )
            })
            .collect()
    }

    #[test]
    fn lpm_prefers_longest_prefix() {
        let table = vec![
            TableEntry::forward(LpmKey::new(ip("10.0.0.0"), 16).unwrap(), mac("00:00:00:00:00:0a"), 1),
            TableEntry::forward(LpmKey::new(ip("10.0.1.0"), 24).unwrap(), mac("00:00:00:00:00:0b"), 2),
        ];
        // 10.0.1.5 sits in both prefixes; /24 wins.
        let hit = lpm_lookup(&table, ip("10.0.1.5")).unwrap();
        assert_eq!(hit.key.prefix_len(), 24);
        let hit = lpm_lookup(&table, ip("10.0.9.5")).unwrap();
        assert_eq!(hit.key.prefix_len(), 16);
        assert!(lpm_lookup(&table, ip("192.168.0.1")).is_none());
        assert!(lpm_lookup(&[], ip("10.0.1.5")).is_none());
    }

    #[test]
    fn lpm_on_reference_table() {
        let (_, runtimes) = paper_runtimes();
        let s1 = &runtimes[&NodeId::new("s1")];
        let hit = lpm_lookup(&s1.table, ip("10.0.2.2")).unwrap();
        assert_eq!(
            hit.action,
            TableAction::Forward { dst_mac: mac("00:00:00:05:05:02"), port: 3 }
        );
    }

    #[test]
    fn forward_semantics() {
        let p = PacketState::ipv4(
            mac("00:00:00:00:00:bb"),
            mac("00:00:00:00:00:aa"),
            ip("10.0.2.2"),
            ip("10.0.1.1"),
            64,
        );
        let p = apply_ipv4_forward(p, mac("00:00:00:05:05:02"), 3).unwrap();
        assert_eq!(p.meta.egress_spec, Some(3));
        assert_eq!(p.eth.src_mac, mac("00:00:00:00:00:aa"));
        assert_eq!(p.eth.dst_mac, mac("00:00:00:05:05:02"));
        assert_eq!(p.ipv4.unwrap().ttl, 63);
        assert!(!p.meta.dropped);
    }

    #[test]
    fn forward_ttl_boundary() {
        let p = PacketState::ipv4(
            mac("00:00:00:00:00:bb"),
            mac("00:00:00:00:00:aa"),
            ip("10.0.2.2"),
            ip("10.0.1.1"),
            1,
        );
        let p = apply_ipv4_forward(p, mac("00:00:00:05:05:02"), 3).unwrap();
        assert_eq!(p.ipv4.unwrap().ttl, 0);
        assert!(p.meta.dropped);
    }

    /// Two forwards, hand-stepped: field algebra must match exactly.
    #[test]
    fn forward_two_hops_hand_stepped() {
        let p = PacketState::ipv4(
            mac("00:00:00:00:00:bb"),
            mac("00:00:00:00:00:aa"),
            ip("10.0.2.2"),
            ip("10.0.1.1"),
            64,
        );
        let m1 = mac("00:00:00:05:05:02");
        let m2 = mac("00:00:00:02:02:07");
        let p = apply_ipv4_forward(p, m1, 3).unwrap();
        let p = apply_ipv4_forward(p, m2, 7).unwrap();
        assert_eq!(p.meta.egress_spec, Some(7));
        assert_eq!(p.eth.src_mac, m1); // previous dst after the second swap
        assert_eq!(p.eth.dst_mac, m2);
        assert_eq!(p.ipv4.unwrap().ttl, 62);
    }

    #[test]
    fn forward_without_ipv4_header_fails() {
        let mut p = PacketState::ipv4(
            mac("00:00:00:00:00:bb"),
            mac("00:00:00:00:00:aa"),
            ip("10.0.2.2"),
            ip("10.0.1.1"),
            64,
        );
        p.ipv4 = None;
        p.eth.ether_type = 0x86dd;
        assert!(matches!(
            apply_ipv4_forward(p, mac("00:00:00:05:05:02"), 3),
            Err(PipelineError::MissingHeader)
        ));
    }

    #[test]
    fn drop_is_idempotent_and_preserves_headers() {
        let p = PacketState::ipv4(
            mac("00:00:00:00:00:bb"),
            mac("00:00:00:00:00:aa"),
            ip("10.0.2.2"),
            ip("10.0.1.1"),
            64,
        );
        let d1 = apply_drop(p.clone());
        assert!(d1.meta.dropped);
        assert_eq!(d1.ipv4.unwrap().ttl, 64);
        assert_eq!(d1.eth, p.eth);
        let d2 = apply_drop(d1.clone());
        assert_eq!(d1, d2);
    }

    #[test]
    fn process_hit_emits_on_expected_port() {
        let (t, runtimes) = paper_runtimes();
        let attach = t.host_attachment(&NodeId::new("h1")).unwrap();
        let mut p = PacketState::ipv4(
            mac("00:00:00:00:01:01"),
            mac("00:00:00:01:01:01"),
            ip("10.0.1.1"),
            ip("10.0.3.3"),
            64,
        );
        p.meta.ingress_port = attach.switch_port;
        let (p, events) = process_packet(&runtimes[&NodeId::new("s1")], p);
        assert_eq!(p.meta.egress_spec, Some(3));
        assert!(matches!(events[1], TraceEvent::TableHit { ref entry, .. }
            if entry.key.addr() == ip("10.0.3.3")));
        assert!(matches!(events.last(), Some(TraceEvent::Emitted { port: 3, .. })));
    }

    #[test]
    fn process_non_ipv4_drops() {
        let (_, runtimes) = paper_runtimes();
        let mut p = PacketState::ipv4(
            mac("00:00:00:00:01:01"),
            mac("00:00:00:01:01:01"),
            ip("10.0.1.1"),
            ip("10.0.3.3"),
            64,
        );
        p.eth.ether_type = 0x86dd;
        p.ipv4 = None;
        let (p, events) = process_packet(&runtimes[&NodeId::new("s1")], p);
        assert!(p.meta.dropped);
        assert!(matches!(events.last(), Some(TraceEvent::Dropped { reason: DropReason::NonIpv4, .. })));
    }

    #[test]
    fn process_miss_drops() {
        let (_, runtimes) = paper_runtimes();
        let p = PacketState::ipv4(
            mac("00:00:00:00:01:01"),
            mac("00:00:00:01:01:01"),
            ip("10.0.1.1"),
            ip("10.99.99.99"),
            64,
        );
        let (p, events) = process_packet(&runtimes[&NodeId::new("s1")], p);
        assert!(p.meta.dropped);
        assert!(matches!(events.last(), Some(TraceEvent::Dropped { reason: DropReason::TableMiss, .. })));
    }

    #[test]
    fn no_action_passes_headers_then_drops() {
        let entry = TableEntry {
            key: LpmKey::host(ip("10.0.1.1")),
            action: TableAction::NoAction,
        };
        let rt = SwitchRuntime {
            switch: NodeId::new("s1"),
            table: vec![entry],
            pipeline_profile: "ipv4-mst".into(),
        };
        let p = PacketState::ipv4(
            mac("00:00:00:00:00:bb"),
            mac("00:00:00:00:00:aa"),
            ip("10.0.2.2"),
            ip("10.0.1.1"),
            64,
        );
        let (out, events) = process_packet(&rt, p.clone());
        assert!(out.meta.dropped);
        assert_eq!(out.eth, p.eth);
        assert_eq!(out.ipv4, p.ipv4);
        assert!(matches!(events.last(), Some(TraceEvent::Dropped { reason: DropReason::NoEgress, .. })));
    }

    #[test]
    fn run_packet_delivers_along_tree() {
        let (t, runtimes) = paper_runtimes();
        let trace = run_packet(&t, &runtimes, &NodeId::new("h3"), ip("10.0.1.1"), 64).unwrap();
        assert_eq!(trace.delivered_at(), Some(&NodeId::new("h1")));
        let seq: Vec<String> = trace.switch_sequence().iter().map(|n| n.to_string()).collect();
        assert_eq!(seq, vec!["s3", "s5", "s1"]);
    }

    #[test]
    fn run_packet_self_bounce() {
        let (t, runtimes) = paper_runtimes();
        let trace = run_packet(&t, &runtimes, &NodeId::new("h1"), ip("10.0.1.1"), 64).unwrap();
        assert_eq!(trace.delivered_at(), Some(&NodeId::new("h1")));
        let hits = trace
            .events
            .iter()
            .filter(|e| matches!(e, TraceEvent::TableHit { .. }))
            .count();
        assert_eq!(hits, 1);
    }

    #[test]
    fn run_packet_ttl_one_drops_at_first_switch() {
        let (t, runtimes) = paper_runtimes();
        let trace = run_packet(&t, &runtimes, &NodeId::new("h3"), ip("10.0.1.1"), 1).unwrap();
        assert_eq!(trace.drop_reason(), Some(DropReason::TtlExpired));
        assert_eq!(trace.switch_sequence().len(), 1);
    }

    #[test]
    fn run_packet_detects_loops() {
        // Hand-built looping rules: s1 -> s2 -> s1 for the same destination.
        let (t, mut runtimes) = paper_runtimes();
        let dst = ip("10.0.2.2");
        let s1 = runtimes.get_mut(&NodeId::new("s1")).unwrap();
        s1.table = vec![TableEntry::forward(LpmKey::host(dst), mac("00:00:00:02:02:04"), 4)];
        let s2 = runtimes.get_mut(&NodeId::new("s2")).unwrap();
        s2.table = vec![TableEntry::forward(LpmKey::host(dst), mac("00:00:00:01:01:04"), 4)];
        let err = run_packet(&t, &runtimes, &NodeId::new("h1"), dst, 200).unwrap_err();
        assert!(matches!(err, PipelineError::HopLimitExceeded { .. }));
    }

    #[test]
    fn traces_are_pure() {
        let (t, runtimes) = paper_runtimes();
        let a = run_packet(&t, &runtimes, &NodeId::new("h2"), ip("10.0.1.1"), 64).unwrap();
        let b = run_packet(&t, &runtimes, &NodeId::new("h2"), ip("10.0.1.1"), 64).unwrap();
        assert_eq!(a, b);
        assert_eq!(render_trace(&a.events), render_trace(&b.events));
    }
}
