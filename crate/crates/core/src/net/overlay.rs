use std::io;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ids::NodeId;

/// Directed connection requests between nodes.
///
/// Each node owns an ordered list of outgoing connections bounded by the
/// degree bound. Pinned connections sit outside that budget; they model links
/// a node keeps regardless of its protocol (an attacker clique). Once
/// established, every connection carries traffic in both directions, see
/// [`Adjacency`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlayGraph {
    degree_bound: usize,
    outgoing: Vec<Vec<NodeId>>,
    pinned: Vec<Vec<NodeId>>,
}

impl OverlayGraph {
    pub fn empty(n: usize, degree_bound: usize) -> Self {
        OverlayGraph { degree_bound, outgoing: vec![Vec::new(); n], pinned: vec![Vec::new(); n] }
    }

    pub fn from_outgoing(degree_bound: usize, outgoing: Vec<Vec<NodeId>>) -> Result<Self> {
        let mut g = Self::empty(outgoing.len(), degree_bound);
        for (v, list) in outgoing.into_iter().enumerate() {
            g.set_outgoing(NodeId::from(v), list)?;
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.outgoing.len()
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn outgoing(&self, v: NodeId) -> &[NodeId] {
        &self.outgoing[v.index()]
    }

    pub fn pinned(&self, v: NodeId) -> &[NodeId] {
        &self.pinned[v.index()]
    }

    /// Replace `v`'s outgoing list, enforcing the degree bound and rejecting
    /// self-edges, duplicates and unknown nodes.
    pub fn set_outgoing(&mut self, v: NodeId, list: Vec<NodeId>) -> Result<()> {
        let n = self.num_nodes();
        if list.len() > self.degree_bound {
            return Err(Error::config(format!(
                "node {v} requests {} outgoing connections, bound is {}",
                list.len(),
                self.degree_bound
            )));
        }
        for (i, &u) in list.iter().enumerate() {
            if u == v {
                return Err(Error::config(format!("node {v} cannot connect to itself")));
            }
            if u.index() >= n {
                return Err(Error::config(format!("node {v} connects to unknown node {u}")));
            }
            if list[..i].contains(&u) {
                return Err(Error::config(format!("node {v} lists neighbor {u} twice")));
            }
        }
        self.outgoing[v.index()] = list;
        Ok(())
    }

    /// Add a connection from `u` to `v` outside `u`'s degree budget.
    pub fn pin(&mut self, u: NodeId, v: NodeId) {
        if u != v && !self.pinned[u.index()].contains(&v) {
            self.pinned[u.index()].push(v);
        }
    }

    /// All directed connection requests: outgoing first, then pinned.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let out = self.outgoing.iter().enumerate().flat_map(|(v, l)| l.iter().map(move |&u| (NodeId::from(v), u)));
        let pin = self.pinned.iter().enumerate().flat_map(|(v, l)| l.iter().map(move |&u| (NodeId::from(v), u)));
        out.chain(pin)
    }

    /// Nodes that hold an outgoing or pinned connection to each node.
    pub fn incoming(&self) -> Vec<Vec<NodeId>> {
        let mut inc = vec![Vec::new(); self.num_nodes()];
        for (src, dst) in self.edges() {
            inc[dst.index()].push(src);
        }
        for l in &mut inc {
            l.sort_unstable();
            l.dedup();
        }
        inc
    }

    /// The undirected neighbor sets induced by all connections.
    pub fn adjacency(&self) -> Adjacency {
        let mut nbrs = vec![Vec::new(); self.num_nodes()];
        for (src, dst) in self.edges() {
            nbrs[src.index()].push(dst);
            nbrs[dst.index()].push(src);
        }
        for l in &mut nbrs {
            l.sort_unstable();
            l.dedup();
        }
        Adjacency { neighbors: nbrs }
    }

    /// Writes `epoch,src,dst` rows.
    pub fn write_edge_csv<W: io::Write>(&self, epoch: usize, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "src", "dst"])?;
        for (s, d) in self.edges() {
            w.write_record([epoch.to_string(), s.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Effective neighbor sets: `u ∈ neighbors(v) ⇔ v ∈ neighbors(u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<NodeId>>,
}

impl Adjacency {
    /// Build from explicit undirected edges.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut g = OverlayGraph::empty(n, usize::MAX);
        for &(a, b) in edges {
            g.pin(NodeId(a), NodeId(b));
        }
        g.adjacency()
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbors of `v`, ascending.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[v.index()]
    }

    pub fn are_neighbors(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors[u.index()].binary_search(&v).is_ok()
    }
}

/// Every node picks `d` distinct outgoing neighbors uniformly at random.
pub fn random_overlay<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<OverlayGraph> {
    if d >= n {
        return Err(Error::config(format!("degree bound {d} must be below the node count {n}")));
    }
    let mut g = OverlayGraph::empty(n, d);
    for v in 0..n {
        let picks = rand::seq::index::sample(rng, n - 1, d)
            .into_iter()
            .map(|i| NodeId::from(if i >= v { i + 1 } else { i }))
            .collect();
        g.outgoing[v] = picks;
    }
    Ok(g)
}

/// Every node connects to every other node; the degree bound is `n - 1`.
pub fn complete_overlay(n: usize) -> Result<OverlayGraph> {
    if n < 2 {
        return Err(Error::config("a complete overlay needs at least two nodes"));
    }
    let mut g = OverlayGraph::empty(n, n - 1);
    for v in 0..n {
        g.outgoing[v] = (0..n).filter(|&u| u != v).map(NodeId::from).collect();
    }
    Ok(g)
}
