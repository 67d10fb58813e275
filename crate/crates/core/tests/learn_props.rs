mod common;

use bnbench_core::graph::{cpdag_of, write_graph};
use bnbench_core::indtest::DsepOracle;
use bnbench_core::learn::{
    fci_with_test, fges, gfci, images_bdeu, learn, pc, pc_with_test, Algorithm, FciParams, FgesParams, LearnSettings,
    PcParams,
};
use bnbench_core::model::forward_sample;
use bnbench_core::score::{DataScore, LocalScore};
use bnbench_core::{Dataset, MixedGraph};
use common::{random_bn, random_dag, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn oracle_dags() -> Vec<MixedGraph> {
    let mut r = rng(2024);
    (0..200)
        .map(|_| {
            let n = r.random_range(2..=6);
            random_dag(n, 0.3, &mut r)
        })
        .collect()
}

#[test]
fn oracle_pc_recovers_the_cpdag() {
    for (i, dag) in oracle_dags().into_iter().enumerate() {
        let want = cpdag_of(&dag).unwrap();
        let oracle = DsepOracle::new(dag.clone());
        for params in [PcParams::pc(), PcParams::pc_stable(), PcParams::cpc(), PcParams::cpc_stable(), PcParams::pc_max()] {
            let out = pc_with_test(&dag, &oracle, &params);
            assert_eq!(out.graph, want, "dag {i}: {}\nparams {params:?}", write_graph(&dag));
        }
    }
}

#[test]
fn oracle_fci_adjacencies_equal_pc() {
    for (i, dag) in oracle_dags().into_iter().enumerate() {
        let oracle = DsepOracle::new(dag.clone());
        let pc = pc_with_test(&dag, &oracle, &PcParams::pc());
        for rfci in [false, true] {
            for conservative in [false, true] {
                let p = FciParams { conservative, ..FciParams::default() };
                let out = fci_with_test(&dag, &oracle, &p, rfci);
                assert_eq!(out.graph.skeleton(), pc.graph.skeleton(), "dag {i}, rfci {rfci}, conservative {conservative}");
            }
        }
    }
}

fn sampled(seed: u64, n: usize, rows: usize) -> Dataset {
    let mut r = rng(seed);
    let g = random_dag(n, 0.35, &mut r);
    forward_sample(&random_bn(&g, 3, &mut r), rows, seed).unwrap()
}

#[test]
fn pc_stable_skeleton_ignores_column_order() {
    let d = sampled(11, 8, 2000);
    let base = pc(&d, &PcParams::pc_stable()).unwrap().graph;
    let mut r = rng(5);
    for _ in 0..20 {
        let mut order: Vec<usize> = (0..d.n_vars()).collect();
        order.shuffle(&mut r);
        let g = pc(&d.select_columns(&order), &PcParams::pc_stable()).unwrap().graph;
        let mut back: Vec<(usize, usize)> = g
            .skeleton()
            .into_iter()
            .map(|(a, b)| (order[a].min(order[b]), order[a].max(order[b])))
            .collect();
        back.sort_unstable();
        assert_eq!(back, base.skeleton(), "order {order:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fges_never_scores_below_the_empty_graph(seed in any::<u64>(), n in 2usize..=6, rows in 50usize..600) {
        let d = sampled(seed, n, rows);
        let out = fges(&d, &FgesParams::default()).unwrap();
        let score = DataScore::new(&d, Default::default(), Default::default()).unwrap();
        let empty = score.total(&MixedGraph::new(d.names()).unwrap());
        prop_assert!(out.score >= empty - 1e-9, "{} < {}", out.score, empty);
    }

    #[test]
    fn images_on_one_dataset_is_fges(seed in any::<u64>(), n in 2usize..=6, rows in 50usize..600) {
        let d = sampled(seed, n, rows);
        let a = fges(&d, &FgesParams::default()).unwrap();
        let b = images_bdeu(&[&d], &FgesParams::default()).unwrap();
        prop_assert_eq!(write_graph(&a.graph), write_graph(&b.graph));
        prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
    }

    #[test]
    fn gfci_skeleton_is_inside_fges(seed in any::<u64>(), n in 2usize..=6, rows in 100usize..800) {
        let d = sampled(seed, n, rows);
        let f = fges(&d, &FgesParams::default()).unwrap().graph;
        let g = gfci(&d, &FgesParams::default(), &FciParams::default()).unwrap().graph;
        for (a, b) in g.skeleton() {
            prop_assert!(f.is_adjacent(a, b));
        }
    }
}

#[test]
fn every_algorithm_is_deterministic() {
    let d = sampled(7, 7, 1500);
    let s = LearnSettings::default();
    for alg in Algorithm::ALL {
        let a = write_graph(&learn(alg, &[&d], &s).unwrap());
        let b = write_graph(&learn(alg, &[&d.clone()], &s).unwrap());
        assert_eq!(a, b, "{alg}");
    }
}
