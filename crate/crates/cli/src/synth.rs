//! Seeded random ground-truth networks.

use bnbench_core::graph::MixedGraph;
use bnbench_core::model::{Cpt, DiscreteBn};
use bnbench_core::{Error, Result, Variable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub nodes: usize,
    pub arcs: usize,
    pub min_arity: usize,
    pub max_arity: usize,
    pub seed: u64,
}

impl GenSpec {
    /// 27 variables with 2 to 7 states and 31 arcs.
    pub fn housing(seed: u64) -> Self {
        GenSpec { nodes: 27, arcs: 31, min_arity: 2, max_arity: 7, seed }
    }
}

/// Random DAG with exactly `arcs` edges drawn uniformly over node pairs and
/// oriented along a random order; arities uniform in the range; CPT rows
/// from a flat Dirichlet.
pub fn gen_ground_truth(spec: &GenSpec) -> Result<DiscreteBn> {
    let n = spec.nodes;
    if n == 0 || spec.arcs > n * (n - 1) / 2 {
        return Err(Error::Invalid(format!("{} arcs do not fit in a DAG on {n} nodes", spec.arcs)));
    }
    if spec.min_arity < 2 || spec.max_arity < spec.min_arity || spec.max_arity > bnbench_core::data::MAX_ARITY {
        return Err(Error::Invalid(format!("arity range {}..={}", spec.min_arity, spec.max_arity)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = (n.max(2) - 1).to_string().len();
    let names: Vec<String> = (0..n).map(|i| format!("V{i:0width$}")).collect();
    let mut g = MixedGraph::new(names.clone())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.shuffle(&mut rng);
    for &(i, j) in &pairs[..spec.arcs] {
        // positions in the random order decide direction
        g.add_directed(order[i], order[j]);
    }

    let arities: Vec<usize> = (0..n).map(|_| rng.random_range(spec.min_arity..=spec.max_arity)).collect();
    let variables: Vec<Variable> = names.iter().zip(&arities).map(|(name, &k)| Variable::indexed(name, k)).collect::<Result<_>>()?;
    let mut cpts = Vec::with_capacity(n);
    for (v, &k) in arities.iter().enumerate() {
        let parents = g.parents(v);
        let pa: Vec<usize> = parents.iter().map(|&p| arities[p]).collect();
        let q: usize = pa.iter().product();
        let mut table = Vec::with_capacity(q * k);
        for _ in 0..q {
            let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect::<Vec<f64>>();
            let s: f64 = draws.iter().sum();
            table.extend(draws.iter().map(|x| x / s));
        }
        cpts.push(Cpt::new(v, parents, pa, k, table)?);
    }
    DiscreteBn::new(g, variables, cpts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bnbench_core::graph::is_acyclic;
    use bnbench_core::model::write_bn;

    #[test]
    fn default_shape() {
        let bn = gen_ground_truth(&GenSpec::housing(7)).unwrap();
        assert_eq!(bn.n(), 27);
        assert_eq!(bn.graph().edge_count(), 31);
        assert!(is_acyclic(bn.graph()).unwrap());
        assert!(bn.arities().iter().all(|&k| (2..=7).contains(&k)));
    }

    #[test]
    fn triangle() {
        let spec = GenSpec { nodes: 3, arcs: 3, min_arity: 2, max_arity: 2, seed: 1 };
        let bn = gen_ground_truth(&spec).unwrap();
        assert_eq!(bn.graph().edge_count(), 3);
        assert!(is_acyclic(bn.graph()).unwrap());
        assert!(gen_ground_truth(&GenSpec { arcs: 4, ..spec }).is_err());
    }

    #[test]
    fn seeded() {
        let a = write_bn(&gen_ground_truth(&GenSpec::housing(3)).unwrap());
        let b = write_bn(&gen_ground_truth(&GenSpec::housing(3)).unwrap());
        let c = write_bn(&gen_ground_truth(&GenSpec::housing(4)).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
