//! Minimum spanning tree of the switch graph, rooted orientation, and tree
//! path queries.
//!
//! The MST is computed over the switch-induced subgraph only; host attachment
//! links are appended during orientation, so hosts are always leaves. Kruskal
//! runs over edges totally ordered by `(weight, a.node, b.node, a.port,
//! b.port)` (links are canonical, `a` sorts first), which makes ties — and
//! therefore golden files — reproducible.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::topology::{Link, NodeId, Topology, Weight};

#[derive(Debug, Error)]
pub enum MstError {
    #[error("DisconnectedGraph: switch graph is not connected")]
    DisconnectedGraph,
    #[error("unknown root {0}")]
    UnknownRoot(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("graph too large to enumerate: {0} switches (limit {MAX_ENUMERATION_SWITCHES})")]
    TooLarge(usize),
}

/// Spanning-tree enumeration is exponential; refuse beyond this many switches.
pub const MAX_ENUMERATION_SWITCHES: usize = 8;

/// An acyclic set of switch-to-switch links spanning all switches.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgeSet {
    edges: Vec<Link>,
}

impl EdgeSet {
    fn from_links(mut edges: Vec<Link>) -> Self {
        edges.sort();
        EdgeSet { edges }
    }

    pub fn edges(&self) -> &[Link] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_pair(&self, x: &NodeId, y: &NodeId) -> bool {
        self.edges.iter().any(|l| l.connects(x, y))
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already in the same component.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

fn switch_ids(t: &Topology) -> Vec<NodeId> {
    t.switches().map(|n| n.id.clone()).collect()
}

fn switch_links(t: &Topology) -> Vec<&Link> {
    t.links()
        .iter()
        .filter(|l| {
            t.node(&l.a.node).is_some_and(|n| n.is_switch())
                && t.node(&l.b.node).is_some_and(|n| n.is_switch())
        })
        .collect()
}

/// Total order on canonical links used for Kruskal tie-breaking.
fn edge_order(l: &Link) -> (Weight, &NodeId, &NodeId, u32, u32) {
    (l.weight, &l.a.node, &l.b.node, l.a.port, l.b.port)
}

/// Kruskal over the switch subgraph. Deterministic under ties.
pub fn compute_mst(t: &Topology) -> Result<EdgeSet, MstError> {
    let switches = switch_ids(t);
    let index: BTreeMap<&NodeId, usize> =
        switches.iter().enumerate().map(|(i, id)| (id, i)).collect();

    let mut candidates = switch_links(t);
    candidates.sort_by(|x, y| edge_order(x).cmp(&edge_order(y)));

    let mut uf = UnionFind::new(switches.len());
    let mut picked = Vec::new();
    for link in candidates {
        if uf.union(index[&link.a.node], index[&link.b.node]) {
            picked.push(link.clone());
        }
    }
    if !switches.is_empty() && picked.len() != switches.len() - 1 {
        return Err(MstError::DisconnectedGraph);
    }
    Ok(EdgeSet::from_links(picked))
}

pub fn total_weight(mst: &EdgeSet) -> Weight {
    mst.edges.iter().map(|l| l.weight).sum()
}

/// Every spanning tree of the switch subgraph, exactly once. Test oracle for
/// [`compute_mst`]; guarded by [`MAX_ENUMERATION_SWITCHES`].
pub fn enumerate_spanning_trees(t: &Topology) -> Result<Vec<EdgeSet>, MstError> {
    let switches = switch_ids(t);
    if switches.len() > MAX_ENUMERATION_SWITCHES {
        return Err(MstError::TooLarge(switches.len()));
    }
    if switches.len() <= 1 {
        return Ok(vec![EdgeSet::from_links(Vec::new())]);
    }
    let index: BTreeMap<&NodeId, usize> =
        switches.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let links = switch_links(t);
    let need = switches.len() - 1;
    if links.len() < need {
        return Ok(Vec::new());
    }

    let mut trees = Vec::new();
    let mut combo: Vec<usize> = (0..need).collect();
    loop {
        let mut uf = UnionFind::new(switches.len());
        let acyclic = combo
            .iter()
            .all(|&i| uf.union(index[&links[i].a.node], index[&links[i].b.node]));
        if acyclic {
            trees.push(EdgeSet::from_links(combo.iter().map(|&i| links[i].clone()).collect()));
        }

        // next k-combination of link indices
        let mut pos = need;
        while pos > 0 && combo[pos - 1] == links.len() - (need - pos) - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        combo[pos - 1] += 1;
        for j in pos..need {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(trees)
}

/// A node's link toward the root: its parent, the local port that reaches the
/// parent, and the parent's facing port.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParentLink {
    pub parent: NodeId,
    pub egress_port: u32,
    pub parent_port: u32,
}

/// Rooted orientation of an MST plus host attachments. Hosts are leaves:
/// every host's parent is its attachment switch.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpanningTree {
    root: NodeId,
    parent: BTreeMap<NodeId, ParentLink>,
    children: BTreeMap<NodeId, Vec<NodeId>>,
}

impl SpanningTree {
    pub fn root(&self) -> &NodeId {
        &self.root
    }

    pub fn parent(&self, n: &NodeId) -> Option<&ParentLink> {
        self.parent.get(n)
    }

    pub fn children(&self, n: &NodeId) -> &[NodeId] {
        self.children.get(n).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        n == &self.root || self.parent.contains_key(n)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        std::iter::once(&self.root).chain(self.parent.keys().filter(move |k| **k != self.root))
    }

    pub fn node_count(&self) -> usize {
        self.parent.len() + 1
    }

    pub fn is_tree_edge(&self, x: &NodeId, y: &NodeId) -> bool {
        self.parent.get(x).is_some_and(|pl| &pl.parent == y)
            || self.parent.get(y).is_some_and(|pl| &pl.parent == x)
    }

    /// Ports of the tree edge `x -- y` as `(x's port, y's port)`.
    pub fn edge_ports(&self, x: &NodeId, y: &NodeId) -> Option<(u32, u32)> {
        if let Some(pl) = self.parent.get(x) {
            if &pl.parent == y {
                return Some((pl.egress_port, pl.parent_port));
            }
        }
        if let Some(pl) = self.parent.get(y) {
            if &pl.parent == x {
                return Some((pl.parent_port, pl.egress_port));
            }
        }
        None
    }

    fn ancestors(&self, start: &NodeId) -> Vec<NodeId> {
        let mut chain = vec![start.clone()];
        let mut cur = start;
        while let Some(pl) = self.parent.get(cur) {
            chain.push(pl.parent.clone());
            cur = &pl.parent;
        }
        chain
    }
}

/// Orients `mst` at `root` (a switch, or a collection host resolved to its
/// attachment switch) and appends host attachment links.
pub fn orient_tree(t: &Topology, mst: &EdgeSet, root: &NodeId) -> Result<SpanningTree, MstError> {
    let root_switch = t
        .root_switch_for(root)
        .ok_or_else(|| MstError::UnknownRoot(root.clone()))?;

    let mut adjacency: BTreeMap<&NodeId, Vec<&Link>> = BTreeMap::new();
    for link in mst.edges() {
        adjacency.entry(&link.a.node).or_default().push(link);
        adjacency.entry(&link.b.node).or_default().push(link);
    }

    let mut parent: BTreeMap<NodeId, ParentLink> = BTreeMap::new();
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut seen = BTreeSet::from([root_switch.clone()]);
    let mut queue = VecDeque::from([root_switch.clone()]);
    while let Some(cur) = queue.pop_front() {
        for link in adjacency.get(&cur).into_iter().flatten() {
            let local = link.end_at(&cur).unwrap();
            let far = link.other_end(&cur).unwrap();
            if seen.insert(far.node.clone()) {
                parent.insert(
                    far.node.clone(),
                    ParentLink {
                        parent: cur.clone(),
                        egress_port: far.port,
                        parent_port: local.port,
                    },
                );
                children.entry(cur.clone()).or_default().push(far.node.clone());
                queue.push_back(far.node.clone());
            }
        }
    }

    if t.switches().any(|s| !seen.contains(&s.id)) {
        return Err(MstError::DisconnectedGraph);
    }

    for host in t.hosts() {
        let attach = t.host_attachment(&host.id).expect("validated host has one link");
        parent.insert(
            host.id.clone(),
            ParentLink {
                parent: attach.switch.clone(),
                egress_port: attach.host_port,
                parent_port: attach.switch_port,
            },
        );
        children.entry(attach.switch.clone()).or_default().push(host.id.clone());
    }
    for kids in children.values_mut() {
        kids.sort();
    }

    Ok(SpanningTree { root: root_switch, parent, children })
}

/// Unique simple path between two tree nodes; `tree_path(x, x) == [x]`.
pub fn tree_path(tree: &SpanningTree, from: &NodeId, to: &NodeId) -> Result<Vec<NodeId>, MstError> {
    for n in [from, to] {
        if !tree.contains(n) {
            return Err(MstError::UnknownNode(n.clone()));
        }
    }
    let up_from = tree.ancestors(from);
    let up_to = tree.ancestors(to);
    let from_index: BTreeMap<&NodeId, usize> =
        up_from.iter().enumerate().map(|(i, n)| (n, i)).collect();

    let (lca_from_idx, lca_to_idx) = up_to
        .iter()
        .enumerate()
        .find_map(|(j, n)| from_index.get(n).map(|&i| (i, j)))
        .expect("tree is connected through the root");

    let mut path: Vec<NodeId> = up_from[..=lca_from_idx].to_vec();
    path.extend(up_to[..lca_to_idx].iter().rev().cloned());
    Ok(path)
}
