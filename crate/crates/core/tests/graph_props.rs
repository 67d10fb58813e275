mod common;

use bnbench_core::graph::{
    colliders, consistent_extension, cpdag_of, is_acyclic, meek_closure, parse_graph, randomize_orientation,
    write_graph,
};
use bnbench_core::{Mark, MixedGraph};
use common::{has_cycle_brute, random_dag, rng};
use proptest::prelude::*;
use rand::Rng;

fn directed_graph(n: usize, arcs: &[(usize, usize)]) -> MixedGraph {
    let mut g = MixedGraph::with_nodes(n);
    for &(a, b) in arcs {
        if a != b && !g.is_adjacent(a, b) {
            g.add_directed(a, b);
        }
    }
    g
}

fn arb_digraph() -> impl Strategy<Value = MixedGraph> {
    (2usize..=7).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..=n * 2).prop_map(move |arcs| directed_graph(n, &arcs))
    })
}

/// PDAG between a DAG and its CPDAG: some undirected CPDAG edges take the
/// DAG's direction.
fn arb_pdag() -> impl Strategy<Value = (MixedGraph, MixedGraph)> {
    (any::<u64>(), 2usize..=6).prop_map(|(seed, n)| {
        let mut r = rng(seed);
        let dag = random_dag(n, 0.4, &mut r);
        let mut p = cpdag_of(&dag).unwrap();
        for (a, b) in p.skeleton() {
            if p.is_undirected(a, b) && r.random_bool(0.3) {
                if dag.is_directed(a, b) {
                    p.add_directed(a, b);
                } else {
                    p.add_directed(b, a);
                }
            }
        }
        (dag, p)
    })
}

fn any_graph() -> impl Strategy<Value = MixedGraph> {
    let mark = prop_oneof![Just(Mark::Tail), Just(Mark::Arrow), Just(Mark::Circle)];
    (2usize..=6).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n, mark.clone(), mark.clone()), 0..=n * 2).prop_map(move |es| {
            let mut g = MixedGraph::with_nodes(n);
            for (a, b, ma, mb) in es {
                if a != b && !g.is_adjacent(a, b) {
                    g.set_marks(a, ma, b, mb);
                }
            }
            g
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn is_acyclic_matches_cycle_enumeration(g in arb_digraph()) {
        prop_assert_eq!(is_acyclic(&g).unwrap(), !has_cycle_brute(&g));
    }

    #[test]
    fn meek_closure_is_idempotent((_dag, p) in arb_pdag()) {
        let once = meek_closure(&p).unwrap();
        let twice = meek_closure(&once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn extension_keeps_skeleton_and_colliders(seed in any::<u64>(), n in 2usize..=6) {
        let dag = random_dag(n, 0.4, &mut rng(seed));
        let cpdag = cpdag_of(&dag).unwrap();
        let ext = consistent_extension(&cpdag).unwrap();
        prop_assert!(is_acyclic(&ext).unwrap());
        prop_assert_eq!(ext.skeleton(), dag.skeleton());
        prop_assert_eq!(colliders(&ext), colliders(&dag));
        prop_assert_eq!(cpdag_of(&ext).unwrap(), cpdag);
    }

    #[test]
    fn extension_of_partial_orientation_respects_it((_dag, p) in arb_pdag()) {
        let ext = consistent_extension(&p).unwrap();
        for e in p.edges().into_iter().filter(|e| e.is_directed()) {
            prop_assert_eq!(ext.edge(e.a, e.b), Some(e));
        }
        prop_assert_eq!(ext.skeleton(), p.skeleton());
    }

    #[test]
    fn randomize_orientation_is_pure_and_keeps_skeleton(g in any_graph(), seed in any::<u64>()) {
        let a = randomize_orientation(&g, seed).unwrap();
        let b = randomize_orientation(&g, seed).unwrap();
        prop_assert_eq!(&a.dag, &b.dag);
        prop_assert_eq!(a.dag.skeleton(), g.skeleton());
        prop_assert!(is_acyclic(&a.dag).unwrap());
    }

    #[test]
    fn randomize_orientation_of_a_dag_is_the_dag(seed in any::<u64>(), n in 2usize..=7) {
        let dag = random_dag(n, 0.4, &mut rng(seed));
        let o = randomize_orientation(&dag, seed ^ 1).unwrap();
        prop_assert_eq!(o.dag, dag);
        prop_assert!(!o.fallback);
    }

    #[test]
    fn graph_text_round_trip(g in any_graph()) {
        prop_assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
    }
}
