//! Local scores for search and whole-model fit statistics.

use crate::data::{stratify, Dataset, EXCLUDED, MISSING};
use crate::error::{Error, Result};
use crate::graph::{MixedGraph, NodeId};
use crate::indtest::chi2_upper_tail;
use crate::model::DiscreteBn;
use statrs::function::gamma::ln_gamma;
use std::cell::RefCell;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalScoreParams {
    /// Equivalent sample size spread over each CPT.
    pub sample_prior: f64,
    /// Parent-count prior; `1` disables it.
    pub structure_prior: f64,
    /// Multiplier on the BIC complexity term.
    pub penalty_discount: f64,
}

impl Default for LocalScoreParams {
    fn default() -> Self {
        LocalScoreParams { sample_prior: 1.0, structure_prior: 1.0, penalty_discount: 1.0 }
    }
}

impl LocalScoreParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.sample_prior) && ok(self.structure_prior) && ok(self.penalty_discount) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("score parameters must be positive: {self:?}")))
        }
    }
}

/// `Σ_i (k_i − 1) · Π_{p ∈ pa(i)} k_p`.
pub fn free_parameters(g: &MixedGraph, arities: &[usize]) -> Result<u64> {
    if arities.len() != g.n() {
        return Err(Error::Invalid(format!("{} arities for {} nodes", arities.len(), g.n())));
    }
    if !crate::graph::is_acyclic(g)? {
        return Err(Error::Cyclic);
    }
    const LIMIT: u128 = 1 << 62;
    let mut f: u128 = 0;
    for i in 0..g.n() {
        let mut q: u128 = 1;
        for p in g.parents(i) {
            q = q.checked_mul(arities[p] as u128).filter(|&v| v <= LIMIT).ok_or(Error::Overflow)?;
        }
        f += (arities[i] as u128 - 1) * q;
        if f > LIMIT {
            return Err(Error::Overflow);
        }
    }
    Ok(f as u64)
}

/// `m(m − 1)/2 − f`, possibly negative.
pub fn degrees_of_freedom(m: usize, f: u64) -> i64 {
    let m = m as i128;
    (m * (m - 1) / 2 - f as i128).clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Deviance {
    pub value: f64,
    /// Observed cells whose expected count fell below `1e-12`.
    pub skipped_cells: usize,
    pub skipped_rows: u64,
}

/// Column of `d` holding each BN variable, matched by name.
pub(crate) fn column_map(bn: &DiscreteBn, d: &Dataset) -> Result<Vec<usize>> {
    bn.variables()
        .iter()
        .map(|v| {
            let c = d.index_of(&v.name).ok_or_else(|| Error::UnknownNode(v.name.clone()))?;
            if d.arity(c) != v.arity() {
                return Err(Error::Invalid(format!(
                    "{:?} has {} states in the model but {} in the data",
                    v.name,
                    v.arity(),
                    d.arity(c)
                )));
            }
            Ok(c)
        })
        .collect()
}

/// `Σ (D − E)² / E` over the distinct full-joint configurations observed in
/// `d`, with `E = N · P_bn(cell)`.
pub fn chi2_deviance(bn: &DiscreteBn, d: &Dataset) -> Result<Chi2Deviance> {
    let cols = column_map(bn, d)?;
    let mut cells: HashMap<Vec<u8>, u64> = HashMap::new();
    for r in 0..d.n_rows() {
        let row: Vec<u8> = cols.iter().map(|&c| d.value(r, c)).collect();
        if row.contains(&MISSING) {
            return Err(Error::MissingData("chi-square deviance"));
        }
        *cells.entry(row).or_insert(0) += 1;
    }
    let mut keys: Vec<(&Vec<u8>, &u64)> = cells.iter().collect();
    keys.sort_unstable();
    let n = d.n_rows() as f64;
    let mut out = Chi2Deviance { value: 0.0, skipped_cells: 0, skipped_rows: 0 };
    for (row, &count) in keys {
        let e = n * bn.joint_probability(row);
        if e < 1e-12 {
            out.skipped_cells += 1;
            out.skipped_rows += count;
            continue;
        }
        let diff = count as f64 - e;
        out.value += diff * diff / e;
    }
    Ok(out)
}

/// Chi², Df, p and BIC of a fitted model on data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelStats {
    pub chi2: f64,
    pub df: i64,
    pub p_value: f64,
    pub bic: f64,
    pub n: usize,
    pub free_parameters: u64,
    /// Df was zero or negative; p is reported as 1.
    pub df_flagged: bool,
    pub skipped_cells: usize,
}

pub fn model_stats(bn: &DiscreteBn, d: &Dataset) -> Result<ModelStats> {
    let dev = chi2_deviance(bn, d)?;
    let f = free_parameters(bn.graph(), &bn.arities())?;
    let df = degrees_of_freedom(bn.n(), f);
    let p_value = if df <= 0 { 1.0 } else { chi2_upper_tail(dev.value, df as usize) };
    let n = d.n_rows();
    Ok(ModelStats {
        chi2: dev.value,
        df,
        p_value,
        bic: dev.value - df as f64 * (n as f64).ln(),
        n,
        free_parameters: f,
        df_flagged: df <= 0,
        skipped_cells: dev.skipped_cells,
    })
}

/// Family counts: `(N_jk table, number of strata, rows used)`.
fn family_counts(d: &Dataset, node: usize, parents: &[usize]) -> (Vec<u32>, usize, usize) {
    let strata = stratify(d, parents);
    let k = d.arity(node);
    let col = d.column(node);
    let mut table = vec![0u32; strata.count * k];
    let mut used = 0;
    for (r, &id) in strata.ids.iter().enumerate() {
        if id == EXCLUDED || col[r] == MISSING {
            continue;
        }
        table[id as usize * k + col[r] as usize] += 1;
        used += 1;
    }
    (table, strata.count, used)
}

/// BDeu local score with equivalent sample size `sample_prior`.
pub fn bdeu_local(d: &Dataset, node: usize, parents: &[usize], p: &LocalScoreParams) -> f64 {
    let k = d.arity(node);
    let q: f64 = parents.iter().map(|&v| d.arity(v) as f64).product();
    let a_j = p.sample_prior / q;
    let a_jk = a_j / k as f64;
    let (table, count, _) = family_counts(d, node, parents);
    let mut score = 0.0;
    let lg_a_j = ln_gamma(a_j);
    let lg_a_jk = ln_gamma(a_jk);
    for j in 0..count {
        let row = &table[j * k..(j + 1) * k];
        let n_j: u32 = row.iter().sum();
        if n_j == 0 {
            continue;
        }
        score += lg_a_j - ln_gamma(a_j + n_j as f64);
        for &n_jk in row.iter().filter(|&&c| c > 0) {
            score += ln_gamma(a_jk + n_jk as f64) - lg_a_jk;
        }
    }
    if p.structure_prior != 1.0 && d.n_vars() > 1 {
        score += parents.len() as f64 * (p.structure_prior / (d.n_vars() - 1) as f64).ln();
    }
    score
}

/// Maximised log-likelihood of `node` given `parents` minus
/// `penalty_discount · (k − 1) q / 2 · ln N`.
pub fn bic_local(d: &Dataset, node: usize, parents: &[usize], p: &LocalScoreParams) -> f64 {
    let k = d.arity(node);
    let q: f64 = parents.iter().map(|&v| d.arity(v) as f64).product();
    let (table, count, used) = family_counts(d, node, parents);
    let mut ll = 0.0;
    for j in 0..count {
        let row = &table[j * k..(j + 1) * k];
        let n_j: u32 = row.iter().sum();
        if n_j == 0 {
            continue;
        }
        for &n_jk in row.iter().filter(|&&c| c > 0) {
            ll += n_jk as f64 * (n_jk as f64 / n_j as f64).ln();
        }
    }
    let params = (k - 1) as f64 * q;
    ll - p.penalty_discount * params / 2.0 * (used.max(1) as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreKind {
    #[default]
    Bdeu,
    Bic,
}

/// A decomposable score over parent sets.
pub trait LocalScore {
    fn n_vars(&self) -> usize;
    /// Score of `node` with the given parents (any order).
    fn local(&self, node: NodeId, parents: &[NodeId]) -> f64;

    fn total(&self, dag: &MixedGraph) -> f64 {
        (0..dag.n()).map(|i| self.local(i, &dag.parents(i))).sum()
    }
}

/// Data-backed local score; with several datasets the score is the mean of
/// the per-dataset scores. Results are cached per instance.
pub struct DataScore<'a> {
    datasets: Vec<&'a Dataset>,
    kind: ScoreKind,
    params: LocalScoreParams,
    cache: RefCell<HashMap<(NodeId, Vec<NodeId>), f64>>,
}

impl<'a> DataScore<'a> {
    pub fn new(d: &'a Dataset, kind: ScoreKind, params: LocalScoreParams) -> Result<Self> {
        Self::averaged(vec![d], kind, params)
    }

    pub fn averaged(datasets: Vec<&'a Dataset>, kind: ScoreKind, params: LocalScoreParams) -> Result<Self> {
        params.validate()?;
        let first = datasets.first().ok_or_else(|| Error::Empty("dataset list".into()))?;
        if datasets.iter().any(|d| d.variables() != first.variables()) {
            return Err(Error::VariableMismatch);
        }
        if datasets.iter().any(|d| d.has_missing()) {
            return Err(Error::MissingData("score-based search"));
        }
        Ok(DataScore { datasets, kind, params, cache: RefCell::new(HashMap::new()) })
    }

    pub fn datasets(&self) -> &[&'a Dataset] {
        &self.datasets
    }
}

impl LocalScore for DataScore<'_> {
    fn n_vars(&self) -> usize {
        self.datasets[0].n_vars()
    }

    fn local(&self, node: NodeId, parents: &[NodeId]) -> f64 {
        let mut sorted = parents.to_vec();
        sorted.sort_unstable();
        let key = (node, sorted);
        if let Some(&s) = self.cache.borrow().get(&key) {
            return s;
        }
        let sum: f64 = self
            .datasets
            .iter()
            .map(|d| match self.kind {
                ScoreKind::Bdeu => bdeu_local(d, node, &key.1, &self.params),
                ScoreKind::Bic => bic_local(d, node, &key.1, &self.params),
            })
            .sum();
        let s = sum / self.datasets.len() as f64;
        self.cache.borrow_mut().insert(key, s);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variable;
    use approx::assert_relative_eq;

    fn binary_column(zeros: usize, ones: usize) -> Dataset {
        let col: Vec<u8> = std::iter::repeat_n(0, zeros).chain(std::iter::repeat_n(1, ones)).collect();
        Dataset::new(vec![Variable::indexed("a", 2).unwrap()], vec![col]).unwrap()
    }

    #[test]
    fn free_parameter_examples() {
        let g = MixedGraph::with_nodes(3);
        assert_eq!(free_parameters(&g, &[2, 2, 2]).unwrap(), 3);
        let mut col = MixedGraph::with_nodes(3);
        col.add_directed(0, 2);
        col.add_directed(1, 2);
        assert_eq!(free_parameters(&col, &[2, 2, 2]).unwrap(), 1 + 1 + 4);
        // node with 4 states and two ternary parents: (4 - 1) · 9
        assert_eq!(free_parameters(&col, &[3, 3, 4]).unwrap(), 2 + 2 + 27);
    }

    #[test]
    fn free_parameters_overflow() {
        let mut g = MixedGraph::with_nodes(15);
        for p in 0..14 {
            g.add_directed(p, 14);
        }
        assert!(matches!(free_parameters(&g, &[32; 15]), Err(Error::Overflow)));
    }

    #[test]
    fn df_examples() {
        assert_eq!(degrees_of_freedom(3, 3), 0);
        assert_eq!(degrees_of_freedom(52, 0), 1326);
        assert_eq!(degrees_of_freedom(2, 3), -2);
    }

    #[test]
    fn bdeu_single_observation() {
        let d = binary_column(1, 0);
        let s = bdeu_local(&d, 0, &[], &LocalScoreParams::default());
        assert_relative_eq!(s, 0.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn bdeu_empty_slice_is_zero() {
        let d = Dataset::new(vec![Variable::indexed("a", 2).unwrap()], vec![vec![MISSING, MISSING]]).unwrap();
        assert_eq!(bdeu_local(&d, 0, &[], &LocalScoreParams::default()), 0.0);
    }

    #[test]
    fn structure_prior_term() {
        let vars = vec![Variable::indexed("a", 2).unwrap(), Variable::indexed("b", 2).unwrap(), Variable::indexed("c", 2).unwrap()];
        let d = Dataset::from_rows(vars, &[vec![0, 1, 0], vec![1, 1, 0]]).unwrap();
        let base = LocalScoreParams::default();
        let with = LocalScoreParams { structure_prior: 0.5, ..base };
        let diff = bdeu_local(&d, 0, &[1, 2], &with) - bdeu_local(&d, 0, &[1, 2], &base);
        assert_relative_eq!(diff, 2.0 * (0.5f64 / 2.0).ln(), max_relative = 1e-12);
    }

    #[test]
    fn bic_examples() {
        let p = LocalScoreParams::default();
        let s = bic_local(&binary_column(50, 50), 0, &[], &p);
        assert_relative_eq!(s, 100.0 * 0.5f64.ln() - 0.5 * 100f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(s, -71.617, epsilon = 5e-4);
        let s = bic_local(&binary_column(100, 0), 0, &[], &p);
        assert_relative_eq!(s, -0.5 * 100f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(s, -2.3026, epsilon = 5e-5);
    }

    #[test]
    fn averaged_score_of_one_dataset_is_exact() {
        let d = binary_column(30, 12);
        let one = DataScore::new(&d, ScoreKind::Bdeu, LocalScoreParams::default()).unwrap();
        let two = DataScore::averaged(vec![&d, &d], ScoreKind::Bdeu, LocalScoreParams::default()).unwrap();
        assert_eq!(one.local(0, &[]), bdeu_local(&d, 0, &[], &LocalScoreParams::default()));
        assert_eq!(one.local(0, &[]), two.local(0, &[]));
    }

    #[test]
    fn score_requires_complete_matching_data() {
        let d = binary_column(3, 3);
        let other = Dataset::new(vec![Variable::indexed("b", 2).unwrap()], vec![vec![0, 1]]).unwrap();
        assert!(matches!(
            DataScore::averaged(vec![&d, &other], ScoreKind::Bdeu, LocalScoreParams::default()),
            Err(Error::VariableMismatch)
        ));
        let m = Dataset::new(vec![Variable::indexed("a", 2).unwrap()], vec![vec![0, MISSING]]).unwrap();
        assert!(matches!(DataScore::new(&m, ScoreKind::Bic, LocalScoreParams::default()), Err(Error::MissingData(_))));
    }
}
