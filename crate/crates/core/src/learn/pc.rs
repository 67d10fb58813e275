//! Fast adjacency search and the PC family.

use super::{depth_limit, ColliderRule, PcParams};
use crate::data::Dataset;
use crate::error::Result;
use crate::graph::{apply_meek, unshielded_triples, MeekOptions, MixedGraph, NodeId, UnshieldedTriple};
use crate::indtest::{CiTest, DataCiTest, SepsetMap};
use itertools::Itertools;

/// Adjacency search from the complete graph. Returns the undirected
/// skeleton and the sets that removed each missing edge.
pub fn fas(d: &Dataset, p: &PcParams) -> Result<(MixedGraph, SepsetMap)> {
    p.validate()?;
    let test = DataCiTest::new(d, p.alpha, p.test);
    let g = MixedGraph::new(d.names())?;
    Ok(fas_with_test(g.complete_like(crate::graph::Mark::Tail), &test, p.depth, p.stable))
}

/// FAS starting from the adjacencies of `start` (its marks are ignored).
///
/// At level `ℓ` every remaining edge `x --- y` is tested against the size-`ℓ`
/// subsets of `adj(x) \ {y}` and then of `adj(y) \ {x}`; the first
/// independence removes the edge. With `stable` the adjacency sets are
/// frozen at the start of each level, so removals made during a level do
/// not affect which subsets are tried.
pub fn fas_with_test(start: MixedGraph, test: &dyn CiTest, depth: i32, stable: bool) -> (MixedGraph, SepsetMap) {
    let n = start.n();
    let mut g = start.empty_like();
    for (a, b) in start.skeleton() {
        g.add_undirected(a, b);
    }
    let mut sepsets = SepsetMap::new();
    let max_depth = depth_limit(depth);
    let mut level = 0usize;
    loop {
        if level > max_depth {
            break;
        }
        if (0..n).all(|x| g.degree(x) <= level) {
            break;
        }
        let frozen: Vec<Vec<NodeId>> = (0..n).map(|x| g.adjacent(x)).collect();
        for x in 0..n {
            for y in frozen[x].clone() {
                if y < x || !g.is_adjacent(x, y) {
                    continue;
                }
                let mut removed = false;
                for (a, b) in [(x, y), (y, x)] {
                    let adj: Vec<NodeId> = if stable { frozen[a].clone() } else { g.adjacent(a) };
                    let cands: Vec<NodeId> = adj.into_iter().filter(|&v| v != b).collect();
                    if cands.len() < level {
                        continue;
                    }
                    for s in cands.iter().copied().combinations(level) {
                        let r = test.test(x, y, &s);
                        if r.independent {
                            g.remove_edge(x, y);
                            sepsets.insert(x, y, s, r.p_value);
                            removed = true;
                            break;
                        }
                    }
                    if removed {
                        break;
                    }
                }
            }
        }
        level += 1;
    }
    (g, sepsets)
}

#[derive(Debug, Clone)]
pub struct PcOutput {
    pub graph: MixedGraph,
    pub sepsets: SepsetMap,
    /// Colliders skipped because an earlier collider oriented one of their
    /// edges the other way.
    pub conflicts: Vec<UnshieldedTriple>,
    /// Triples left unoriented by conservative voting.
    pub ambiguous: Vec<UnshieldedTriple>,
}

pub fn pc(d: &Dataset, p: &PcParams) -> Result<PcOutput> {
    p.validate()?;
    let test = DataCiTest::new(d, p.alpha, p.test);
    let g = MixedGraph::new(d.names())?;
    Ok(pc_with_test(&g, &test, p))
}

/// PC over an arbitrary test; only the node names of `nodes` are used.
pub fn pc_with_test(nodes: &MixedGraph, test: &dyn CiTest, p: &PcParams) -> PcOutput {
    let (mut g, sepsets) = fas_with_test(nodes.complete_like(crate::graph::Mark::Tail), test, p.depth, p.stable);
    let mut colliders = Vec::new();
    let mut ambiguous = Vec::new();
    for t in unshielded_triples(&g) {
        match classify_triple(&g, test, &sepsets, t, p) {
            TripleKind::Collider => colliders.push(t),
            TripleKind::Noncollider => {}
            TripleKind::Ambiguous => ambiguous.push(t),
        }
    }
    let conflicts = orient_colliders(&mut g, &colliders);
    let opts = MeekOptions { strict: false, ambiguous: ambiguous.iter().map(|t| (t.x, t.y, t.z)).collect() };
    apply_meek(&mut g, &opts).expect("lenient Meek rules do not fail");
    PcOutput { graph: g, sepsets, conflicts, ambiguous }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TripleKind {
    Collider,
    Noncollider,
    Ambiguous,
}

/// Subsets of `adj(x) \ {z}` and of `adj(z) \ {x}` up to the given size, in
/// a fixed order with duplicates removed.
fn neighbourhood_subsets(g: &MixedGraph, x: NodeId, z: NodeId, max_size: usize) -> Vec<Vec<NodeId>> {
    let mut out: Vec<Vec<NodeId>> = Vec::new();
    for (a, b) in [(x, z), (z, x)] {
        let cands: Vec<NodeId> = g.adjacent(a).into_iter().filter(|&v| v != b).collect();
        for k in 0..=cands.len().min(max_size) {
            for s in cands.iter().copied().combinations(k) {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
    }
    out
}

pub(crate) fn classify_triple(g: &MixedGraph, test: &dyn CiTest, sepsets: &SepsetMap, t: UnshieldedTriple, p: &PcParams) -> TripleKind {
    let recorded = sepsets.get(t.x, t.z);
    match p.collider_rule {
        ColliderRule::Sepset => match recorded {
            Some(s) if s.set.contains(&t.y) => TripleKind::Noncollider,
            _ => TripleKind::Collider,
        },
        ColliderRule::Conservative => conservative_vote(g, test, recorded.map(|s| s.set.as_slice()), t, depth_limit(p.depth)),
        ColliderRule::MaxP => {
            let bound = if p.maxp_heuristic { depth_limit(p.maxp_depth) } else { depth_limit(p.depth) };
            let mut best: Option<(f64, bool)> = recorded.map(|s| (s.p_value, s.set.contains(&t.y)));
            for s in neighbourhood_subsets(g, t.x, t.z, bound) {
                let r = test.test(t.x, t.z, &s);
                if best.is_none_or(|(bp, _)| r.p_value > bp) {
                    best = Some((r.p_value, s.contains(&t.y)));
                }
            }
            match best {
                Some((_, true)) => TripleKind::Noncollider,
                _ => TripleKind::Collider,
            }
        }
    }
}

/// CPC voting: collider if `y` is in no separating subset, noncollider if
/// it is in all of them, ambiguous otherwise. The recorded sepset always
/// takes part in the vote.
pub(crate) fn conservative_vote(g: &MixedGraph, test: &dyn CiTest, recorded: Option<&[NodeId]>, t: UnshieldedTriple, max_size: usize) -> TripleKind {
    let (mut with_y, mut without_y) = (0usize, 0usize);
    if let Some(s) = recorded {
        if s.contains(&t.y) {
            with_y += 1;
        } else {
            without_y += 1;
        }
    }
    for s in neighbourhood_subsets(g, t.x, t.z, max_size) {
        if recorded == Some(s.as_slice()) {
            continue;
        }
        if test.test(t.x, t.z, &s).independent {
            if s.contains(&t.y) {
                with_y += 1;
            } else {
                without_y += 1;
            }
        }
    }
    match (with_y, without_y) {
        (0, 0) => TripleKind::Collider,
        (0, _) => TripleKind::Collider,
        (_, 0) => TripleKind::Noncollider,
        _ => TripleKind::Ambiguous,
    }
}

fn reaches_directed(g: &MixedGraph, from: NodeId, to: NodeId) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(g.children(v));
        }
    }
    false
}

/// Orients `x → y ← z` for each collider in order. A collider whose edges
/// an earlier collider already pointed away from `y`, or that would close a
/// directed cycle, is skipped and returned.
fn orient_colliders(g: &mut MixedGraph, colliders: &[UnshieldedTriple]) -> Vec<UnshieldedTriple> {
    let mut conflicts = Vec::new();
    for &t in colliders {
        if g.is_directed(t.y, t.x) || g.is_directed(t.y, t.z) || reaches_directed(g, t.y, t.x) || reaches_directed(g, t.y, t.z) {
            conflicts.push(t);
            continue;
        }
        g.add_directed(t.x, t.y);
        g.add_directed(t.z, t.y);
    }
    conflicts
}
