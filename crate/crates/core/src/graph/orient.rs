use super::{Mark, MixedGraph, NodeId};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// `x ~ y ~ z` with `x` and `z` not adjacent. Stored with `x < z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnshieldedTriple {
    pub x: NodeId,
    pub y: NodeId,
    pub z: NodeId,
}

/// Whether the directed edges alone form an acyclic graph. Other edge
/// kinds are ignored.
pub fn directed_part_is_acyclic(g: &MixedGraph) -> bool {
    topological_order(g).is_some()
}

/// Kahn ordering of the directed part, lowest index first among ready nodes.
/// `None` if the directed part has a cycle.
pub fn topological_order(g: &MixedGraph) -> Option<Vec<NodeId>> {
    let n = g.n();
    let mut indeg: Vec<usize> = (0..n).map(|j| g.parents(j).len()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !done[i] && indeg[i] == 0)?;
        done[next] = true;
        order.push(next);
        for c in g.children(next) {
            indeg[c] -= 1;
        }
    }
    Some(order)
}

/// Acyclicity test for a graph that must contain only directed edges.
pub fn is_acyclic(g: &MixedGraph) -> Result<bool> {
    g.require_directed()?;
    Ok(directed_part_is_acyclic(g))
}

/// Every unshielded triple, one per unordered `(x, z)` pair and center,
/// sorted by `(x, z, y)`.
pub fn unshielded_triples(g: &MixedGraph) -> Vec<UnshieldedTriple> {
    let mut out = Vec::new();
    for y in 0..g.n() {
        let adj = g.adjacent(y);
        for (i, &x) in adj.iter().enumerate() {
            for &z in &adj[i + 1..] {
                if !g.is_adjacent(x, z) {
                    out.push(UnshieldedTriple { x, y, z });
                }
            }
        }
    }
    out.sort_by_key(|t| (t.x, t.z, t.y));
    out
}

/// Unshielded colliders `x --> y <-- z` of the directed part.
pub fn colliders(g: &MixedGraph) -> Vec<UnshieldedTriple> {
    unshielded_triples(g)
        .into_iter()
        .filter(|t| g.is_directed(t.x, t.y) && g.is_directed(t.z, t.y))
        .collect()
}

#[derive(Debug, Default, Clone)]
pub(crate) struct MeekOptions {
    /// Report a conflict as an error instead of skipping the edge.
    pub strict: bool,
    /// Triples whose collider status is unknown; R1 and R3 will not treat
    /// them as noncolliders.
    pub ambiguous: HashSet<(NodeId, NodeId, NodeId)>,
}

impl MeekOptions {
    fn is_ambiguous(&self, x: NodeId, y: NodeId, z: NodeId) -> bool {
        self.ambiguous.contains(&(x.min(z), y, x.max(z)))
    }
}

fn reaches_directed(g: &MixedGraph, from: NodeId, to: NodeId) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(g.children(v));
    }
    false
}

/// Would some Meek rule orient the undirected edge `a --- b` as `a --> b`?
fn meek_forces(g: &MixedGraph, a: NodeId, b: NodeId, opts: &MeekOptions) -> bool {
    let n = g.n();
    // R1: c --> a --- b, c and b not adjacent
    for c in 0..n {
        if g.is_directed(c, a) && !g.is_adjacent(c, b) && !opts.is_ambiguous(c, a, b) {
            return true;
        }
    }
    // R2: a --> c --> b
    for c in 0..n {
        if g.is_directed(a, c) && g.is_directed(c, b) {
            return true;
        }
    }
    // R3: a --- c --> b, a --- d --> b, c and d not adjacent
    let und: Vec<NodeId> = g.undirected_neighbors(a);
    for (i, &c) in und.iter().enumerate() {
        if !g.is_directed(c, b) {
            continue;
        }
        for &d in &und[i + 1..] {
            if g.is_directed(d, b) && !g.is_adjacent(c, d) && !opts.is_ambiguous(c, a, d) {
                return true;
            }
        }
    }
    // R4: a ~ k --> l --> b, a ~ l, k and b not adjacent
    for k in 0..n {
        if k == b || !g.is_adjacent(a, k) || g.is_adjacent(k, b) {
            continue;
        }
        for l in g.children(k) {
            if l != a && g.is_directed(l, b) && g.is_adjacent(a, l) {
                return true;
            }
        }
    }
    false
}

/// Applies Meek's rules R1–R4 until no undirected edge changes.
pub(crate) fn apply_meek(g: &mut MixedGraph, opts: &MeekOptions) -> Result<()> {
    loop {
        let mut forced = Vec::new();
        for (a, b) in g.skeleton() {
            if !g.is_undirected(a, b) {
                continue;
            }
            let ab = meek_forces(g, a, b, opts);
            let ba = meek_forces(g, b, a, opts);
            match (ab, ba) {
                (true, true) if opts.strict => {
                    return Err(Error::Inconsistent(g.name(a).into(), g.name(b).into()))
                }
                (true, false) => forced.push((a, b)),
                (false, true) => forced.push((b, a)),
                _ => {}
            }
        }
        let mut changed = false;
        for (from, to) in forced {
            if !g.is_undirected(from, to) {
                continue;
            }
            if !opts.strict && reaches_directed(g, to, from) {
                continue;
            }
            g.add_directed(from, to);
            changed = true;
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Closes a PDAG under Meek's orientation rules.
pub fn meek_closure(g: &MixedGraph) -> Result<MixedGraph> {
    g.require_pdag()?;
    let mut out = g.clone();
    apply_meek(&mut out, &MeekOptions { strict: true, ..Default::default() })?;
    Ok(out)
}

/// Dor–Tarsi extension. `pick` chooses among eligible sink candidates
/// (given in ascending order).
fn extend_with(g: &MixedGraph, mut pick: impl FnMut(&[NodeId]) -> NodeId) -> Result<MixedGraph> {
    let n = g.n();
    let mut work = g.clone();
    let mut out = g.clone();
    let mut alive = vec![true; n];
    for _ in 0..n {
        let candidates: Vec<NodeId> = (0..n)
            .filter(|&x| alive[x])
            .filter(|&x| work.children(x).is_empty())
            .filter(|&x| {
                let adj = work.adjacent(x);
                work.undirected_neighbors(x)
                    .iter()
                    .all(|&y| adj.iter().all(|&z| z == y || work.is_adjacent(y, z)))
            })
            .collect();
        if candidates.is_empty() {
            return Err(Error::NoExtension);
        }
        let x = pick(&candidates);
        for y in work.undirected_neighbors(x) {
            out.add_directed(y, x);
        }
        for y in work.adjacent(x) {
            work.remove_edge(x, y);
        }
        alive[x] = false;
    }
    Ok(out)
}

/// A DAG in the class of a PDAG: same skeleton and directed edges, no new
/// colliders. Ties pick the lowest-index sink.
pub fn consistent_extension(g: &MixedGraph) -> Result<MixedGraph> {
    g.require_pdag()?;
    extend_with(g, |c| c[0])
}

/// CPDAG of a DAG: skeleton, unshielded colliders, then Meek's rules.
pub fn cpdag_of(dag: &MixedGraph) -> Result<MixedGraph> {
    if !is_acyclic(dag)? {
        return Err(Error::Cyclic);
    }
    let mut out = dag.empty_like();
    for (a, b) in dag.skeleton() {
        out.add_undirected(a, b);
    }
    for t in colliders(dag) {
        out.add_directed(t.x, t.y);
        out.add_directed(t.z, t.y);
    }
    apply_meek(&mut out, &MeekOptions { strict: true, ..Default::default() })?;
    Ok(out)
}

/// Result of turning a PDAG or PAG into a DAG.
#[derive(Debug, Clone)]
pub struct Orientation {
    pub dag: MixedGraph,
    /// Set when no consistent extension existed and free edges were
    /// directed along a random topological order instead.
    pub fallback: bool,
    /// Directed arcs turned around to break cycles in the directed part.
    pub reversed: usize,
}

/// Random order of the nodes that respects every arc of `g` it can. When
/// the remaining nodes all have parents left (a directed cycle), the one
/// with the fewest remaining parents is taken, ties drawn at random.
fn shuffled_order(g: &MixedGraph, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let n = g.n();
    let mut indeg: Vec<usize> = (0..n).map(|j| g.parents(j).len()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let low = (0..n).filter(|&i| !done[i]).map(|i| indeg[i]).min().unwrap_or(0);
        let ready: Vec<NodeId> = (0..n).filter(|&i| !done[i] && indeg[i] == low).collect();
        let next = ready[rng.random_range(0..ready.len())];
        done[next] = true;
        order.push(next);
        for c in g.children(next) {
            indeg[c] -= 1;
        }
    }
    order
}

/// Turns a PDAG or PAG into a DAG with the same skeleton, reproducibly for
/// a given seed.
///
/// Circle marks become tails (`o->` is read as `-->`, `o-o` as `---`) and
/// bidirected edges are treated as undirected. Among consistent extensions
/// the sink chosen at each step is drawn from the seeded generator. When no
/// consistent extension exists, every edge follows a random topological
/// order of the directed part; arcs on a directed cycle that the order
/// cannot respect are reversed and counted.
pub fn randomize_orientation(g: &MixedGraph, seed: u64) -> Result<Orientation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut relaxed = g.empty_like();
    for e in g.edges() {
        let relax = |m: Mark| if m == Mark::Circle { Mark::Tail } else { m };
        match (relax(e.mark_a), relax(e.mark_b)) {
            (Mark::Arrow, Mark::Arrow) => relaxed.add_undirected(e.a, e.b),
            (ma, mb) => relaxed.set_marks(e.a, ma, e.b, mb),
        }
    }

    let mut pick = |c: &[NodeId]| c[rng.random_range(0..c.len())];
    if let Ok(dag) = extend_with(&relaxed, &mut pick) {
        return Ok(Orientation { dag, fallback: false, reversed: 0 });
    }
    let order = shuffled_order(&relaxed, &mut rng);
    let mut rank = vec![0; g.n()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let mut dag = relaxed.empty_like();
    let mut reversed = 0;
    for (a, b) in relaxed.skeleton() {
        let (from, to) = if rank[a] < rank[b] { (a, b) } else { (b, a) };
        if relaxed.is_directed(to, from) {
            reversed += 1;
        }
        dag.add_directed(from, to);
    }
    Ok(Orientation { dag, fallback: true, reversed })
}
