//! PAG orientation: collider marks, FCI rules R1–R4 and Zhang's R5–R10.

use crate::graph::{Mark, MixedGraph, NodeId};
use crate::indtest::SepsetMap;
use std::collections::{HashSet, VecDeque};

/// Mark at `b` on the edge `a *-* b`.
fn at(g: &MixedGraph, a: NodeId, b: NodeId) -> Option<Mark> {
    g.endpoint(a, b)
}

fn is(g: &MixedGraph, a: NodeId, b: NodeId, m: Mark) -> bool {
    at(g, a, b) == Some(m)
}

/// `a --> b`
fn parent(g: &MixedGraph, a: NodeId, b: NodeId) -> bool {
    is(g, a, b, Mark::Arrow) && is(g, b, a, Mark::Tail)
}

/// Replace every mark by a circle.
pub(crate) fn reset_circles(g: &mut MixedGraph) {
    for (a, b) in g.skeleton() {
        g.set_marks(a, Mark::Circle, b, Mark::Circle);
    }
}

/// `x *-> y <-* z`
pub(crate) fn orient_collider(g: &mut MixedGraph, x: NodeId, y: NodeId, z: NodeId) {
    g.set_endpoint(x, y, Mark::Arrow);
    g.set_endpoint(z, y, Mark::Arrow);
}

/// Nodes reachable from `x` along paths on which every inner node is a
/// collider or sits in a triangle with its path neighbours.
pub(crate) fn possible_dsep(g: &MixedGraph, x: NodeId) -> Vec<NodeId> {
    let n = g.n();
    let mut seen_edge = vec![false; n * n];
    let mut reach = vec![false; n];
    let mut queue = VecDeque::new();
    for w in g.adjacent(x) {
        seen_edge[x * n + w] = true;
        reach[w] = true;
        queue.push_back((x, w));
    }
    while let Some((a, b)) = queue.pop_front() {
        for c in g.adjacent(b) {
            if c == a || c == x || seen_edge[b * n + c] {
                continue;
            }
            let collider = is(g, a, b, Mark::Arrow) && is(g, c, b, Mark::Arrow);
            if collider || g.is_adjacent(a, c) {
                seen_edge[b * n + c] = true;
                reach[c] = true;
                queue.push_back((b, c));
            }
        }
    }
    (0..n).filter(|&v| reach[v]).collect()
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RuleOptions {
    pub complete: bool,
    /// Longest discriminating path in nodes.
    pub max_path: usize,
    /// Triples `(x, y, z)`, `x < z`, that R1 and R3 must not read as
    /// noncolliders.
    pub ambiguous: HashSet<(NodeId, NodeId, NodeId)>,
}

impl RuleOptions {
    fn ambiguous(&self, a: NodeId, b: NodeId, c: NodeId) -> bool {
        self.ambiguous.contains(&(a.min(c), b, a.max(c)))
    }
}

/// Applies the orientation rules until nothing changes.
pub(crate) fn apply_rules(g: &mut MixedGraph, sepsets: &SepsetMap, opts: &RuleOptions) {
    loop {
        let mut changed = false;
        changed |= r1(g, opts);
        changed |= r2(g);
        changed |= r3(g, opts);
        changed |= r4(g, sepsets, opts.max_path);
        if opts.complete && !changed {
            changed |= r5(g);
            changed |= r6_r7(g);
            changed |= r8(g);
            changed |= r9(g);
            changed |= r10(g);
        }
        if !changed {
            return;
        }
    }
}

fn pairs(g: &MixedGraph, b: NodeId) -> Vec<(NodeId, NodeId)> {
    let adj = g.adjacent(b);
    let mut out = Vec::new();
    for &a in &adj {
        for &c in &adj {
            if a != c {
                out.push((a, c));
            }
        }
    }
    out
}

/// R1: `a *-> b o-* c`, `a` and `c` not adjacent ⟹ `b --> c`.
fn r1(g: &mut MixedGraph, opts: &RuleOptions) -> bool {
    let mut changed = false;
    for b in 0..g.n() {
        for (a, c) in pairs(g, b) {
            if is(g, a, b, Mark::Arrow) && is(g, c, b, Mark::Circle) && !g.is_adjacent(a, c) && !opts.ambiguous(a, b, c) {
                g.set_marks(b, Mark::Tail, c, Mark::Arrow);
                changed = true;
            }
        }
    }
    changed
}

/// R2: `a --> b *-> c` or `a *-> b --> c`, and `a *-o c` ⟹ `a *-> c`.
fn r2(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for b in 0..g.n() {
        for (a, c) in pairs(g, b) {
            if !g.is_adjacent(a, c) || !is(g, a, c, Mark::Circle) {
                continue;
            }
            let first = parent(g, a, b) && is(g, b, c, Mark::Arrow);
            let second = is(g, a, b, Mark::Arrow) && parent(g, b, c);
            if first || second {
                g.set_endpoint(a, c, Mark::Arrow);
                changed = true;
            }
        }
    }
    changed
}

/// R3: `a *-> b <-* c`, `a *-o d o-* c`, `a` and `c` not adjacent,
/// `d *-o b` ⟹ `d *-> b`.
fn r3(g: &mut MixedGraph, opts: &RuleOptions) -> bool {
    let mut changed = false;
    for b in 0..g.n() {
        for d in g.adjacent(b) {
            if !is(g, d, b, Mark::Circle) {
                continue;
            }
            let adj = g.adjacent(b);
            'found: for &a in &adj {
                for &c in &adj {
                    if a < c
                        && a != d
                        && c != d
                        && !g.is_adjacent(a, c)
                        && !opts.ambiguous(a, d, c)
                        && is(g, a, b, Mark::Arrow)
                        && is(g, c, b, Mark::Arrow)
                        && g.is_adjacent(a, d)
                        && g.is_adjacent(c, d)
                        && is(g, a, d, Mark::Circle)
                        && is(g, c, d, Mark::Circle)
                    {
                        g.set_endpoint(d, b, Mark::Arrow);
                        changed = true;
                        break 'found;
                    }
                }
            }
        }
    }
    changed
}

/// R4, the discriminating-path rule. For `b o-* c` with `a <-* b`,
/// `a --> c`, search back from `a` along colliders that are parents of `c`
/// for an endpoint `t` not adjacent to `c`. Then `b --> c` if `b` is in
/// the sepset of `t` and `c`, else `a <-> b <-> c`. Pairs without a
/// recorded sepset are left alone.
fn r4(g: &mut MixedGraph, sepsets: &SepsetMap, max_path: usize) -> bool {
    let mut changed = false;
    let n = g.n();
    for c in 0..n {
        for b in g.adjacent(c) {
            if !is(g, c, b, Mark::Circle) {
                continue;
            }
            for a in g.adjacent(b) {
                if a == c || !g.is_adjacent(a, c) || !is(g, b, a, Mark::Arrow) || !parent(g, a, c) {
                    continue;
                }
                let Some(t) = discriminating_end(g, a, b, c, max_path) else { continue };
                let Some(s) = sepsets.get(t, c) else { continue };
                if s.set.contains(&b) {
                    g.set_marks(b, Mark::Tail, c, Mark::Arrow);
                } else {
                    g.set_marks(a, Mark::Arrow, b, Mark::Arrow);
                    g.set_marks(b, Mark::Arrow, c, Mark::Arrow);
                }
                changed = true;
                break;
            }
        }
    }
    changed
}

/// Breadth-first search for the far end of a discriminating path
/// `<t, ..., a, b, c>` for `b`.
fn discriminating_end(g: &MixedGraph, a: NodeId, b: NodeId, c: NodeId, max_path: usize) -> Option<NodeId> {
    let n = g.n();
    // path length in nodes when `v` is the last collider: len[v] + 2 (b, c)
    let mut len = vec![usize::MAX; n];
    len[a] = 1;
    len[b] = 0;
    len[c] = 0;
    let mut queue = VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        if len[v] + 3 > max_path {
            continue;
        }
        for w in g.adjacent(v) {
            if len[w] != usize::MAX || !is(g, w, v, Mark::Arrow) {
                continue;
            }
            if !g.is_adjacent(w, c) {
                return Some(w);
            }
            // w must itself be a collider on the path and a parent of c
            if parent(g, w, c) && is(g, v, w, Mark::Arrow) {
                len[w] = len[v] + 1;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Depth-first search for an uncovered path `start, first, ..., target`
/// whose every edge satisfies `edge_ok`. `last_ok` checks the node before
/// `target`.
fn uncovered_path(
    g: &MixedGraph,
    start: NodeId,
    first: NodeId,
    target: NodeId,
    edge_ok: &dyn Fn(&MixedGraph, NodeId, NodeId) -> bool,
    last_ok: &dyn Fn(NodeId) -> bool,
) -> bool {
    let mut on_path = vec![false; g.n()];
    on_path[start] = true;
    on_path[first] = true;
    fn go(
        g: &MixedGraph,
        prev: NodeId,
        cur: NodeId,
        target: NodeId,
        on_path: &mut [bool],
        edge_ok: &dyn Fn(&MixedGraph, NodeId, NodeId) -> bool,
        last_ok: &dyn Fn(NodeId) -> bool,
    ) -> bool {
        for w in g.adjacent(cur) {
            if on_path[w] || g.is_adjacent(prev, w) || !edge_ok(g, cur, w) {
                continue;
            }
            if w == target {
                if last_ok(cur) {
                    return true;
                }
                continue;
            }
            on_path[w] = true;
            if go(g, cur, w, target, on_path, edge_ok, last_ok) {
                return true;
            }
            on_path[w] = false;
        }
        false
    }
    on_path[target] = false;
    go(g, start, first, target, &mut on_path, edge_ok, last_ok)
}

/// Edge `u *-* v` is not into `u` and not out of `v`.
fn potentially_directed(g: &MixedGraph, u: NodeId, v: NodeId) -> bool {
    !is(g, v, u, Mark::Arrow) && !is(g, u, v, Mark::Tail)
}

fn circle_edge(g: &MixedGraph, u: NodeId, v: NodeId) -> bool {
    is(g, u, v, Mark::Circle) && is(g, v, u, Mark::Circle)
}

/// R5: `a o-o b` closing an uncovered circle cycle ⟹ the cycle and `a - b`
/// become tail-tail.
fn r5(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, b) in g.skeleton() {
        if !circle_edge(g, a, b) {
            continue;
        }
        let mut hit = None;
        for c in g.adjacent(a) {
            if c == b || !circle_edge(g, a, c) || g.is_adjacent(c, b) {
                continue;
            }
            if let Some(path) = circle_path(g, a, c, b) {
                hit = Some(path);
                break;
            }
        }
        if let Some(path) = hit {
            g.set_marks(a, Mark::Tail, b, Mark::Tail);
            for w in path.windows(2) {
                g.set_marks(w[0], Mark::Tail, w[1], Mark::Tail);
            }
            changed = true;
        }
    }
    changed
}

/// Uncovered circle path `a, c, ..., d, b` with `d` not adjacent to `a`.
fn circle_path(g: &MixedGraph, a: NodeId, c: NodeId, b: NodeId) -> Option<Vec<NodeId>> {
    fn go(g: &MixedGraph, path: &mut Vec<NodeId>, a: NodeId, b: NodeId) -> bool {
        let cur = *path.last().unwrap();
        let prev = path[path.len() - 2];
        for w in g.adjacent(cur) {
            if path.contains(&w) || g.is_adjacent(prev, w) || !circle_edge(g, cur, w) {
                continue;
            }
            if w == b {
                if !g.is_adjacent(cur, a) {
                    path.push(w);
                    return true;
                }
                continue;
            }
            path.push(w);
            if go(g, path, a, b) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = vec![a, c];
    go(g, &mut path, a, b).then_some(path)
}

/// R6: `a --- b o-* c` ⟹ `b --* c`. R7: `a -o b o-* c`, `a` and `c` not
/// adjacent ⟹ `b --* c`.
fn r6_r7(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for b in 0..g.n() {
        for (a, c) in pairs(g, b) {
            if !is(g, c, b, Mark::Circle) {
                continue;
            }
            let r6 = is(g, a, b, Mark::Tail) && is(g, b, a, Mark::Tail);
            let r7 = is(g, b, a, Mark::Tail) && is(g, a, b, Mark::Circle) && !g.is_adjacent(a, c);
            if r6 || r7 {
                g.set_endpoint(c, b, Mark::Tail);
                changed = true;
            }
        }
    }
    changed
}

/// R8: `a --> b --> c` or `a -o b --> c`, with `a o-> c` ⟹ `a --> c`.
fn r8(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for b in 0..g.n() {
        for (a, c) in pairs(g, b) {
            if !(is(g, c, a, Mark::Circle) && is(g, a, c, Mark::Arrow)) || !parent(g, b, c) {
                continue;
            }
            if parent(g, a, b) || (is(g, b, a, Mark::Tail) && is(g, a, b, Mark::Circle)) {
                g.set_endpoint(c, a, Mark::Tail);
                changed = true;
            }
        }
    }
    changed
}

/// `a o-> c` edges.
fn circle_arrows(g: &MixedGraph) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for (x, y) in g.skeleton() {
        for (a, c) in [(x, y), (y, x)] {
            if is(g, c, a, Mark::Circle) && is(g, a, c, Mark::Arrow) {
                out.push((a, c));
            }
        }
    }
    out
}

/// R9: `a o-> c` with an uncovered potentially directed path
/// `a, b, ..., c`, `b` not adjacent to `c` ⟹ `a --> c`.
fn r9(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in circle_arrows(g) {
        let found = g.adjacent(a).into_iter().any(|b| {
            b != c
                && !g.is_adjacent(b, c)
                && potentially_directed(g, a, b)
                && uncovered_path(g, a, b, c, &potentially_directed, &|_| true)
        });
        if found {
            g.set_endpoint(c, a, Mark::Tail);
            changed = true;
        }
    }
    changed
}

/// R10: `a o-> c`, `b --> c <-- d`, uncovered potentially directed paths
/// from `a` to `b` and to `d` starting through distinct, non-adjacent
/// `m` and `w` ⟹ `a --> c`.
fn r10(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in circle_arrows(g) {
        let pa: Vec<NodeId> = g.adjacent(c).into_iter().filter(|&v| v != a && parent(g, v, c)).collect();
        let starts: Vec<NodeId> = g.adjacent(a).into_iter().filter(|&m| m != c && potentially_directed(g, a, m)).collect();
        let reaches = |m: NodeId, target: NodeId| m == target || uncovered_path(g, a, m, target, &potentially_directed, &|_| true);
        let mut found = false;
        'outer: for (i, &b) in pa.iter().enumerate() {
            for &d in &pa[i + 1..] {
                for &m in &starts {
                    for &w in &starts {
                        if m != w && !g.is_adjacent(m, w) && reaches(m, b) && reaches(w, d) {
                            found = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if found {
            g.set_endpoint(c, a, Mark::Tail);
            changed = true;
        }
    }
    changed
}
