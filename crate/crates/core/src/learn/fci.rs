//! FCI, RFCI, CFCI and GFCI.

use super::pag::{apply_rules, orient_collider, possible_dsep, reset_circles, RuleOptions};
use super::pc::{classify_triple, fas_with_test, TripleKind};
use super::{depth_limit, fges_with_score, ColliderRule, FciParams, FgesParams, PcParams};
use crate::data::Dataset;
use crate::error::Result;
use crate::graph::{unshielded_triples, Mark, MixedGraph, NodeId, UnshieldedTriple};
use crate::indtest::{CiTest, DataCiTest, SepsetMap};
use crate::score::{DataScore, LocalScore};
use itertools::Itertools;

#[derive(Debug, Clone)]
pub struct FciOutput {
    pub graph: MixedGraph,
    pub sepsets: SepsetMap,
    /// Triples left unoriented by conservative voting.
    pub ambiguous: Vec<UnshieldedTriple>,
    /// Adjacencies removed after the initial skeleton search.
    pub extra_removals: usize,
}

/// FCI (CFCI when `p.conservative`), or RFCI when `rfci` is set.
pub fn fci(d: &Dataset, p: &FciParams, rfci: bool) -> Result<FciOutput> {
    p.validate()?;
    let test = DataCiTest::new(d, p.alpha, p.test);
    let nodes = MixedGraph::new(d.names())?;
    Ok(fci_with_test(&nodes, &test, p, rfci))
}

fn collider_params(p: &FciParams) -> PcParams {
    PcParams {
        alpha: p.alpha,
        depth: p.depth,
        collider_rule: if p.conservative { ColliderRule::Conservative } else { ColliderRule::Sepset },
        test: p.test,
        ..PcParams::default()
    }
}

fn rule_options(p: &FciParams, ambiguous: &[UnshieldedTriple]) -> RuleOptions {
    RuleOptions {
        complete: p.complete_rule_set,
        max_path: depth_limit(p.max_discriminating_path),
        ambiguous: ambiguous.iter().map(|t| (t.x, t.y, t.z)).collect(),
    }
}

/// Circles everywhere, then R0. Returns the ambiguous triples.
fn orient_r0(g: &mut MixedGraph, test: &dyn CiTest, sepsets: &SepsetMap, p: &FciParams) -> Vec<UnshieldedTriple> {
    reset_circles(g);
    let params = collider_params(p);
    let mut ambiguous = Vec::new();
    let mut colliders = Vec::new();
    for t in unshielded_triples(g) {
        match classify_triple(g, test, sepsets, t, &params) {
            TripleKind::Collider => colliders.push(t),
            TripleKind::Noncollider => {}
            TripleKind::Ambiguous => ambiguous.push(t),
        }
    }
    for t in colliders {
        orient_collider(g, t.x, t.y, t.z);
    }
    ambiguous
}

/// RFCI's local check: before accepting `x *-> y <-* z`, both `x, y` and
/// `y, z` must stay dependent given the sepset of `x, z`; otherwise the
/// edge is removed and the triples are re-examined.
fn rfci_prune(g: &mut MixedGraph, test: &dyn CiTest, sepsets: &mut SepsetMap) -> usize {
    let mut removed = 0;
    'restart: loop {
        for t in unshielded_triples(g) {
            let Some(s) = sepsets.get(t.x, t.z).map(|s| s.set.clone()) else { continue };
            if s.contains(&t.y) {
                continue;
            }
            for a in [t.x, t.z] {
                let r = test.test(a, t.y, &s);
                if r.independent {
                    g.remove_edge(a, t.y);
                    sepsets.insert(a, t.y, s, r.p_value);
                    removed += 1;
                    continue 'restart;
                }
            }
        }
        return removed;
    }
}

/// Removes `x - y` when some subset of the possible-d-sep set of either
/// endpoint separates them. Possible-d-sep sets come from `oriented`.
fn possible_dsep_stage(g: &mut MixedGraph, oriented: &MixedGraph, test: &dyn CiTest, sepsets: &mut SepsetMap, max_size: usize) -> usize {
    let pds: Vec<Vec<NodeId>> = (0..g.n()).map(|x| possible_dsep(oriented, x)).collect();
    let mut removed = 0;
    for (x, y) in g.skeleton() {
        'edge: for (a, b) in [(x, y), (y, x)] {
            let cands: Vec<NodeId> = pds[a].iter().copied().filter(|&v| v != b).collect();
            for k in 1..=cands.len().min(max_size) {
                for s in cands.iter().copied().combinations(k) {
                    let r = test.test(x, y, &s);
                    if r.independent {
                        g.remove_edge(x, y);
                        sepsets.insert(x, y, s, r.p_value);
                        removed += 1;
                        break 'edge;
                    }
                }
            }
        }
    }
    removed
}

pub fn fci_with_test(nodes: &MixedGraph, test: &dyn CiTest, p: &FciParams, rfci: bool) -> FciOutput {
    let (mut g, mut sepsets) = fas_with_test(nodes.complete_like(Mark::Circle), test, p.depth, true);
    let mut extra_removals = 0;
    let ambiguous = if rfci {
        extra_removals += rfci_prune(&mut g, test, &mut sepsets);
        orient_r0(&mut g, test, &sepsets, p)
    } else {
        let first = orient_r0(&mut g, test, &sepsets, p);
        let oriented = g.clone();
        let removed = possible_dsep_stage(&mut g, &oriented, test, &mut sepsets, p.possible_dsep_depth.min(depth_limit(p.depth)));
        extra_removals += removed;
        if removed > 0 {
            orient_r0(&mut g, test, &sepsets, p)
        } else {
            first
        }
    };
    apply_rules(&mut g, &sepsets, &rule_options(p, &ambiguous));
    FciOutput { graph: g, sepsets, ambiguous, extra_removals }
}

pub fn gfci(d: &Dataset, fp: &FgesParams, cp: &FciParams) -> Result<FciOutput> {
    cp.validate()?;
    let score = DataScore::new(d, fp.score_kind, fp.score)?;
    let test = DataCiTest::new(d, cp.alpha, cp.test);
    let nodes = MixedGraph::new(d.names())?;
    gfci_with(&nodes, &score, &test, fp, cp)
}

/// Adds a sepset for every non-adjacent pair that lacks one, searching
/// subsets of either endpoint's neighbourhood. Pairs with no separating
/// subset are left out.
fn fill_sepsets(g: &MixedGraph, test: &dyn CiTest, sepsets: &mut SepsetMap, max_size: usize) {
    for x in 0..g.n() {
        for y in x + 1..g.n() {
            if g.is_adjacent(x, y) || sepsets.get(x, y).is_some() {
                continue;
            }
            'pair: for a in [x, y] {
                let cands: Vec<NodeId> = g.adjacent(a).into_iter().filter(|&v| v != x && v != y).collect();
                for k in 0..=cands.len().min(max_size) {
                    for s in cands.iter().copied().combinations(k) {
                        let r = test.test(x, y, &s);
                        if r.independent {
                            sepsets.insert(x, y, s, r.p_value);
                            break 'pair;
                        }
                    }
                }
            }
        }
    }
}

/// GFCI: FGES adjacencies pruned by CI tests, colliders taken from FGES
/// (or from sepsets for triples FGES had shielded), then the FCI rules.
pub fn gfci_with(nodes: &MixedGraph, score: &dyn LocalScore, test: &dyn CiTest, fp: &FgesParams, cp: &FciParams) -> Result<FciOutput> {
    cp.validate()?;
    let f = fges_with_score(nodes, score, fp)?.graph;
    let (mut g, mut sepsets) = fas_with_test(f.clone(), test, cp.depth, true);
    let extra_removals = f.edge_count() - g.edge_count();
    reset_circles(&mut g);
    for t in unshielded_triples(&g) {
        let fges_collider = f.is_directed(t.x, t.y) && f.is_directed(t.z, t.y) && !f.is_adjacent(t.x, t.z);
        let pruned_collider = f.is_adjacent(t.x, t.z) && sepsets.separates_with(t.x, t.z, t.y) == Some(false);
        if fges_collider || pruned_collider {
            orient_collider(&mut g, t.x, t.y, t.z);
        }
    }
    fill_sepsets(&g, test, &mut sepsets, depth_limit(cp.depth));
    apply_rules(&mut g, &sepsets, &rule_options(cp, &[]));
    Ok(FciOutput { graph: g, sepsets, ambiguous: Vec::new(), extra_removals })
}
