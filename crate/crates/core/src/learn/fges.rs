//! Greedy equivalence search over CPDAGs.

use super::FgesParams;
use crate::data::Dataset;
use crate::error::Result;
use crate::graph::{consistent_extension, cpdag_of, MixedGraph, NodeId};
use crate::score::{DataScore, LocalScore, ScoreKind};

#[derive(Debug, Clone)]
pub struct FgesOutput {
    pub graph: MixedGraph,
    /// Score of a DAG in the returned class.
    pub score: f64,
    pub inserts: usize,
    pub deletes: usize,
}

pub fn fges(d: &Dataset, p: &FgesParams) -> Result<FgesOutput> {
    let score = DataScore::new(d, p.score_kind, p.score)?;
    let nodes = MixedGraph::new(d.names())?;
    fges_with_score(&nodes, &score, p)
}

/// FGES driven by the mean of per-dataset BDeu scores.
pub fn images_bdeu(ds: &[&Dataset], p: &FgesParams) -> Result<FgesOutput> {
    let score = DataScore::averaged(ds.to_vec(), ScoreKind::Bdeu, p.score)?;
    let nodes = MixedGraph::new(ds[0].names())?;
    fges_with_score(&nodes, &score, p)
}

/// Nodes in every subset of `items`, smallest subsets first.
fn subsets(items: &[NodeId]) -> impl Iterator<Item = Vec<NodeId>> + '_ {
    (0u64..1 << items.len()).map(move |mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
}

fn is_clique(g: &MixedGraph, nodes: &[NodeId]) -> bool {
    nodes.iter().enumerate().all(|(i, &a)| nodes[i + 1..].iter().all(|&b| g.is_adjacent(a, b)))
}

/// Whether some semi-directed path `from ⇝ to` avoids `blocked`.
fn semi_directed_path_avoiding(g: &MixedGraph, from: NodeId, to: NodeId, blocked: &[NodeId]) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for w in g.children(v).into_iter().chain(g.undirected_neighbors(v)) {
            if w == to {
                return true;
            }
            if !seen[w] && !blocked.contains(&w) {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Undirected neighbours of `y` that are adjacent to `x`.
fn na_yx(g: &MixedGraph, x: NodeId, y: NodeId) -> Vec<NodeId> {
    g.undirected_neighbors(y).into_iter().filter(|&t| g.is_adjacent(t, x)).collect()
}

fn union(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug)]
struct Move {
    x: NodeId,
    y: NodeId,
    set: Vec<NodeId>,
    delta: f64,
}

fn best_insert(g: &MixedGraph, score: &dyn LocalScore, p: &FgesParams, allowed: &dyn Fn(NodeId, NodeId) -> bool) -> Option<Move> {
    let n = g.n();
    let mut best: Option<Move> = None;
    for y in 0..n {
        let pa = g.parents(y);
        let und_y = g.undirected_neighbors(y);
        for x in 0..n {
            if x == y || g.is_adjacent(x, y) || !allowed(x, y) {
                continue;
            }
            if g.degree(x) + 1 > p.max_degree || g.degree(y) + 1 > p.max_degree {
                continue;
            }
            let na = na_yx(g, x, y);
            if !is_clique(g, &na) {
                continue;
            }
            let t0: Vec<NodeId> = und_y.iter().copied().filter(|&t| !g.is_adjacent(t, x)).collect();
            for t in subsets(&t0) {
                let na_t = union(&na, &t);
                let base = union(&na_t, &pa);
                let with_x = union(&base, &[x]);
                let delta = score.local(y, &with_x) - score.local(y, &base);
                if delta <= 0.0 || best.as_ref().is_some_and(|b| delta <= b.delta) {
                    continue;
                }
                if !is_clique(g, &na_t) || semi_directed_path_avoiding(g, y, x, &na_t) {
                    continue;
                }
                best = Some(Move { x, y, set: t, delta });
            }
        }
    }
    best
}

fn best_delete(g: &MixedGraph, score: &dyn LocalScore) -> Option<Move> {
    let n = g.n();
    let mut best: Option<Move> = None;
    for y in 0..n {
        for x in 0..n {
            if !(g.is_directed(x, y) || (g.is_undirected(x, y))) {
                continue;
            }
            let pa: Vec<NodeId> = g.parents(y).into_iter().filter(|&v| v != x).collect();
            let na = na_yx(g, x, y);
            for h in subsets(&na) {
                let rest: Vec<NodeId> = na.iter().copied().filter(|v| !h.contains(v)).collect();
                let base = union(&rest, &pa);
                let with_x = union(&base, &[x]);
                let delta = score.local(y, &base) - score.local(y, &with_x);
                if delta <= 0.0 || best.as_ref().is_some_and(|b| delta <= b.delta) {
                    continue;
                }
                if !is_clique(g, &rest) {
                    continue;
                }
                best = Some(Move { x, y, set: h, delta });
            }
        }
    }
    best
}

fn rebuild(g: &MixedGraph) -> MixedGraph {
    let dag = consistent_extension(g).expect("valid GES operators keep the class extendable");
    cpdag_of(&dag).expect("extension is acyclic")
}

/// Forward insertion phase followed by backward deletion, each taking the
/// best-scoring valid operator (lowest `(y, x)` on ties) while it improves
/// the score.
pub fn fges_with_score(nodes: &MixedGraph, score: &dyn LocalScore, p: &FgesParams) -> Result<FgesOutput> {
    p.score.validate()?;
    let mut g = nodes.empty_like();
    let n = g.n();
    let mut score_total: f64 = (0..n).map(|i| score.local(i, &[])).sum();

    let mut effect = vec![true; n * n];
    if p.faithfulness_speedup {
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    effect[x * n + y] = score.local(y, &[x]) - score.local(y, &[]) > 0.0;
                }
            }
        }
    }
    let allowed = |x: NodeId, y: NodeId| effect[x * n + y] || effect[y * n + x];

    let mut inserts = 0;
    while let Some(m) = best_insert(&g, score, p, &allowed) {
        g.add_directed(m.x, m.y);
        for &t in &m.set {
            g.add_directed(t, m.y);
        }
        g = rebuild(&g);
        score_total += m.delta;
        inserts += 1;
    }
    let mut deletes = 0;
    while let Some(m) = best_delete(&g, score) {
        g.remove_edge(m.x, m.y);
        for &h in &m.set {
            g.add_directed(m.y, h);
            if g.is_undirected(m.x, h) {
                g.add_directed(m.x, h);
            }
        }
        g = rebuild(&g);
        score_total += m.delta;
        deletes += 1;
    }
    Ok(FgesOutput { graph: g, score: score_total, inserts, deletes })
}
