//! Mixed graphs with endpoint marks.
//!
//! A single representation covers DAGs (only `-->` edges), PDAGs/CPDAGs
//! (`-->` and `---`) and PAGs (any combination of tail, arrow and circle
//! marks). Edges are stored as an `n × n` endpoint matrix where entry
//! `(i, j)` holds the mark at `j` on the edge between `i` and `j`.

mod io;
mod orient;

pub use io::{parse_graph, write_graph};
pub use orient::{
    colliders, consistent_extension, cpdag_of, directed_part_is_acyclic, is_acyclic,
    meek_closure, randomize_orientation, topological_order, unshielded_triples, Orientation,
    UnshieldedTriple,
};
pub(crate) use orient::{apply_meek, MeekOptions};

use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

/// One edge with the mark at each end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: NodeId,
    pub mark_a: Mark,
    pub b: NodeId,
    pub mark_b: Mark,
}

impl Edge {
    pub fn directed(from: NodeId, to: NodeId) -> Self {
        Edge { a: from, mark_a: Mark::Tail, b: to, mark_b: Mark::Arrow }
    }

    pub fn undirected(a: NodeId, b: NodeId) -> Self {
        Edge { a, mark_a: Mark::Tail, b, mark_b: Mark::Tail }
    }

    pub fn bidirected(a: NodeId, b: NodeId) -> Self {
        Edge { a, mark_a: Mark::Arrow, b, mark_b: Mark::Arrow }
    }

    pub fn nondirected(a: NodeId, b: NodeId) -> Self {
        Edge { a, mark_a: Mark::Circle, b, mark_b: Mark::Circle }
    }

    pub fn is_directed(&self) -> bool {
        matches!(
            (self.mark_a, self.mark_b),
            (Mark::Tail, Mark::Arrow) | (Mark::Arrow, Mark::Tail)
        )
    }

    pub fn is_undirected(&self) -> bool {
        self.mark_a == Mark::Tail && self.mark_b == Mark::Tail
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MixedGraph {
    names: Vec<String>,
    ends: Vec<Option<Mark>>,
}

impl MixedGraph {
    /// Empty graph over the named nodes.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateNode(n.clone()));
            }
        }
        let n = names.len();
        Ok(MixedGraph { names, ends: vec![None; n * n] })
    }

    /// Empty graph with nodes named `X0`, `X1`, ...
    pub fn with_nodes(n: usize) -> Self {
        MixedGraph {
            names: (0..n).map(|i| format!("X{i}")).collect(),
            ends: vec![None; n * n],
        }
    }

    /// Same nodes, no edges.
    pub fn empty_like(&self) -> Self {
        MixedGraph { names: self.names.clone(), ends: vec![None; self.ends.len()] }
    }

    /// Complete graph with `o-o` or `---` edges, depending on `mark`.
    pub fn complete_like(&self, mark: Mark) -> Self {
        let mut g = self.empty_like();
        for i in 0..g.n() {
            for j in i + 1..g.n() {
                g.set_marks(i, mark, j, mark);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: NodeId) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name)
    }

    fn idx(&self, i: NodeId, j: NodeId) -> usize {
        i * self.names.len() + j
    }

    /// Mark at `j` on the edge `i`–`j`, if the edge exists.
    pub fn endpoint(&self, i: NodeId, j: NodeId) -> Option<Mark> {
        self.ends[self.idx(i, j)]
    }

    pub fn is_adjacent(&self, i: NodeId, j: NodeId) -> bool {
        self.ends[self.idx(i, j)].is_some()
    }

    pub fn add_edge(&mut self, e: Edge) -> Result<()> {
        if e.a == e.b {
            return Err(Error::SelfLoop(self.names[e.a].clone()));
        }
        self.set_marks(e.a, e.mark_a, e.b, e.mark_b);
        Ok(())
    }

    pub fn add_directed(&mut self, from: NodeId, to: NodeId) {
        self.set_marks(from, Mark::Tail, to, Mark::Arrow);
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) {
        self.set_marks(a, Mark::Tail, b, Mark::Tail);
    }

    /// Sets both marks of the edge `a`–`b`, creating it if needed.
    pub fn set_marks(&mut self, a: NodeId, mark_a: Mark, b: NodeId, mark_b: Mark) {
        assert_ne!(a, b, "self-loop");
        let ab = self.idx(a, b);
        let ba = self.idx(b, a);
        self.ends[ab] = Some(mark_b);
        self.ends[ba] = Some(mark_a);
    }

    /// Sets the mark at `at` on the existing edge `from`–`at`.
    pub fn set_endpoint(&mut self, from: NodeId, at: NodeId, mark: Mark) {
        let k = self.idx(from, at);
        debug_assert!(self.ends[k].is_some(), "no edge");
        self.ends[k] = Some(mark);
    }

    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) {
        let ab = self.idx(a, b);
        let ba = self.idx(b, a);
        self.ends[ab] = None;
        self.ends[ba] = None;
    }

    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<Edge> {
        let mark_b = self.endpoint(a, b)?;
        let mark_a = self.endpoint(b, a)?;
        Some(Edge { a, mark_a, b, mark_b })
    }

    /// `from --> to`
    pub fn is_directed(&self, from: NodeId, to: NodeId) -> bool {
        self.endpoint(to, from) == Some(Mark::Tail) && self.endpoint(from, to) == Some(Mark::Arrow)
    }

    pub fn is_undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.endpoint(a, b) == Some(Mark::Tail) && self.endpoint(b, a) == Some(Mark::Tail)
    }

    pub fn is_bidirected(&self, a: NodeId, b: NodeId) -> bool {
        self.endpoint(a, b) == Some(Mark::Arrow) && self.endpoint(b, a) == Some(Mark::Arrow)
    }

    pub fn adjacent(&self, i: NodeId) -> Vec<NodeId> {
        (0..self.n()).filter(|&j| self.is_adjacent(i, j)).collect()
    }

    pub fn degree(&self, i: NodeId) -> usize {
        (0..self.n()).filter(|&j| self.is_adjacent(i, j)).count()
    }

    pub fn parents(&self, j: NodeId) -> Vec<NodeId> {
        (0..self.n()).filter(|&i| self.is_directed(i, j)).collect()
    }

    pub fn children(&self, i: NodeId) -> Vec<NodeId> {
        (0..self.n()).filter(|&j| self.is_directed(i, j)).collect()
    }

    pub fn undirected_neighbors(&self, i: NodeId) -> Vec<NodeId> {
        (0..self.n()).filter(|&j| self.is_undirected(i, j)).collect()
    }

    /// All edges, each once, with `a < b`.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if let Some(e) = self.edge(a, b) {
                    out.push(e);
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.ends.iter().filter(|m| m.is_some()).count() / 2
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> Vec<(NodeId, NodeId)> {
        self.edges().into_iter().map(|e| (e.a, e.b)).collect()
    }

    /// True if every edge is `-->`.
    pub fn is_directed_only(&self) -> bool {
        self.edges().iter().all(Edge::is_directed)
    }

    /// True if every edge is `-->` or `---`.
    pub fn is_pdag(&self) -> bool {
        self.edges().iter().all(|e| e.is_directed() || e.is_undirected())
    }

    /// Errors unless the graph only has directed edges.
    pub fn require_directed(&self) -> Result<()> {
        match self.edges().into_iter().find(|e| !e.is_directed()) {
            Some(e) => Err(Error::NotDirected(self.names[e.a].clone(), self.names[e.b].clone())),
            None => Ok(()),
        }
    }

    /// Errors unless the graph only has directed and undirected edges.
    pub fn require_pdag(&self) -> Result<()> {
        match self.edges().into_iter().find(|e| !(e.is_directed() || e.is_undirected())) {
            Some(e) => Err(Error::NotPdag(self.names[e.a].clone(), self.names[e.b].clone())),
            None => Ok(()),
        }
    }

    /// Node-by-node copy under a permutation: node `i` of the result is node
    /// `order[i]` of `self`.
    pub fn permuted(&self, order: &[NodeId]) -> Self {
        let names = order.iter().map(|&i| self.names[i].clone()).collect();
        let n = self.n();
        let mut g = MixedGraph { names, ends: vec![None; n * n] };
        for i in 0..n {
            for j in 0..n {
                g.ends[i * n + j] = self.ends[order[i] * n + order[j]];
            }
        }
        g
    }
}

impl fmt::Debug for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_graph(self))
    }
}

impl fmt::Display for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_graph(self))
    }
}
