#![allow(dead_code)]

use bnbench_core::model::Cpt;
use bnbench_core::{DiscreteBn, MixedGraph, Variable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG: each pair joined with probability `p`, directed along a
/// shuffled node order.
pub fn random_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> MixedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = MixedGraph::with_nodes(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                g.add_directed(order[i], order[j]);
            }
        }
    }
    g
}

/// Random CPTs over `g` with arities in `2..=max_arity`, rows bounded away
/// from zero.
pub fn random_bn(g: &MixedGraph, max_arity: usize, rng: &mut ChaCha8Rng) -> DiscreteBn {
    let arities: Vec<usize> = (0..g.n()).map(|_| rng.random_range(2..=max_arity)).collect();
    bn_with_arities(g, &arities, rng)
}

pub fn bn_with_arities(g: &MixedGraph, arities: &[usize], rng: &mut ChaCha8Rng) -> DiscreteBn {
    let vars: Vec<Variable> = (0..g.n()).map(|i| Variable::indexed(g.name(i), arities[i]).unwrap()).collect();
    let cpts = (0..g.n())
        .map(|i| {
            let ps = g.parents(i);
            let pa: Vec<usize> = ps.iter().map(|&p| arities[p]).collect();
            let q: usize = pa.iter().product();
            let k = arities[i];
            let mut table = Vec::with_capacity(q * k);
            for _ in 0..q {
                let row: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = row.iter().sum();
                table.extend(row.iter().map(|v| v / s));
            }
            Cpt::new(i, ps, pa, k, table).unwrap()
        })
        .collect();
    DiscreteBn::new(g.clone(), vars, cpts).unwrap()
}

/// Every assignment of the given arities, last variable fastest.
pub fn assignments(arities: &[usize]) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for &k in arities {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..k as u8).map(move |s| {
                    let mut b = a.clone();
                    b.push(s);
                    b
                })
            })
            .collect();
    }
    out
}

/// Whether a directed cycle exists, by trying every simple cycle start.
pub fn has_cycle_brute(g: &MixedGraph) -> bool {
    fn walk(g: &MixedGraph, start: usize, at: usize, seen: &mut Vec<bool>) -> bool {
        for c in g.children(at) {
            if c == start {
                return true;
            }
            if !seen[c] {
                seen[c] = true;
                if walk(g, start, c, seen) {
                    return true;
                }
                seen[c] = false;
            }
        }
        false
    }
    (0..g.n()).any(|s| walk(g, s, s, &mut vec![false; g.n()]))
}
