//! Deterministic random-instance generators for tests and experiments.
//! Everything is driven by a caller-supplied RNG, so a fixed seed gives a
//! fixed instance.

use std::collections::BTreeMap;

use rand::Rng;

use crate::topology::{Link, MacAddr, Node, NodeId, PortRef, Topology, Weight};

/// Shape of a generated topology.
#[derive(Clone, Copy, Debug)]
pub struct TopoSpec {
    pub switches: usize,
    /// Extra switch-to-switch links beyond the random spanning tree.
    pub extra_links: usize,
    pub hosts: usize,
    /// Weights are `num/den` with `num` in `1..=9`, `den` in `1..=max_weight_den`.
    pub max_weight_den: i64,
}

impl TopoSpec {
    pub fn new(switches: usize, extra_links: usize, hosts: usize) -> Self {
        TopoSpec { switches, extra_links, hosts, max_weight_den: 4 }
    }
}

fn switch_mac(idx: usize, port: u32) -> MacAddr {
    MacAddr::new([0, 0, 0x10, (idx >> 8) as u8, idx as u8, port as u8])
}

fn host_mac(idx: usize) -> MacAddr {
    MacAddr::new([0, 0, 0, 0, (idx >> 8) as u8, idx as u8])
}

/// Random connected topology: a random spanning tree over the switches plus
/// `extra_links` distinct extra switch pairs, hosts attached to random
/// switches. Always satisfies the topology invariants.
pub fn random_topology<R: Rng>(rng: &mut R, spec: TopoSpec) -> Topology {
    assert!(spec.switches >= 1, "need at least one switch");
    assert!(spec.hosts <= 200, "host addressing scheme supports up to 200 hosts");

    let switch_names: Vec<NodeId> =
        (1..=spec.switches).map(|i| NodeId::new(format!("s{i}"))).collect();
    let mut next_port: BTreeMap<NodeId, u32> = BTreeMap::new();
    let take_port = |names: &mut BTreeMap<NodeId, u32>, node: &NodeId| -> u32 {
        let port = names.entry(node.clone()).or_insert(0);
        *port += 1;
        *port
    };

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 1..spec.switches {
        let j = rng.gen_range(0..i);
        pairs.push((j, i));
    }
    let mut extra = 0;
    let mut attempts = 0;
    while extra < spec.extra_links && attempts < spec.extra_links * 20 {
        attempts += 1;
        if spec.switches < 2 {
            break;
        }
        let i = rng.gen_range(0..spec.switches);
        let j = rng.gen_range(0..spec.switches);
        if i == j {
            continue;
        }
        let pair = (i.min(j), i.max(j));
        if pairs.contains(&pair) {
            continue;
        }
        pairs.push(pair);
        extra += 1;
    }

    let mut links = Vec::new();
    for (i, j) in pairs {
        let a = &switch_names[i];
        let b = &switch_names[j];
        let pa = take_port(&mut next_port, a);
        let pb = take_port(&mut next_port, b);
        links.push(Link::new(
            PortRef::new(a.clone(), pa),
            PortRef::new(b.clone(), pb),
            random_weight(rng, spec.max_weight_den),
        ));
    }

    let mut nodes = Vec::new();
    for h in 1..=spec.hosts {
        let host_id = NodeId::new(format!("h{h}"));
        let switch = &switch_names[rng.gen_range(0..spec.switches)];
        let sp = take_port(&mut next_port, switch);
        links.push(Link::new(
            PortRef::new(host_id.clone(), 1),
            PortRef::new(switch.clone(), sp),
            Weight::from_int(1),
        ));
        let octets = [10, 0, (h >> 8) as u8, h as u8];
        nodes.push(Node::host(host_id, octets.into(), host_mac(h)));
    }

    for (idx, name) in switch_names.iter().enumerate() {
        let ports: BTreeMap<u32, MacAddr> = (1..=next_port.get(name).copied().unwrap_or(0))
            .map(|p| (p, switch_mac(idx + 1, p)))
            .collect();
        nodes.push(Node::switch(name.clone(), ports));
    }

    Topology::new(nodes, links, BTreeMap::new()).expect("generated topology is valid")
}

pub fn random_weight<R: Rng>(rng: &mut R, max_den: i64) -> Weight {
    let num = rng.gen_range(1..=9i64);
    let den = rng.gen_range(1..=max_den.max(1));
    Weight::new(num, den).unwrap()
}
