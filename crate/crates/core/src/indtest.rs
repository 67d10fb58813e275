//! Conditional independence tests for discrete data.

use crate::data::{stratify, Dataset, EXCLUDED, MISSING};
use crate::graph::{MixedGraph, NodeId};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestKind {
    /// Likelihood-ratio statistic `2 Σ O ln(O/E)`.
    #[default]
    G2,
    /// Pearson `Σ (O - E)² / E`.
    Chi2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub independent: bool,
    /// No stratum contributed degrees of freedom.
    pub low_power: bool,
}

impl CiTestResult {
    fn from_stat(statistic: f64, dof: usize, alpha: f64) -> Self {
        let p_value = chi2_upper_tail(statistic, dof);
        CiTestResult { statistic, dof, p_value, independent: p_value > alpha, low_power: dof == 0 }
    }
}

/// `P(X² ≥ statistic)` for `dof` degrees of freedom; `1` when `dof` is 0.
pub fn chi2_upper_tail(statistic: f64, dof: usize) -> f64 {
    if dof == 0 || statistic <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    dist.sf(statistic).clamp(0.0, 1.0)
}

/// Something that can judge `x ⟂ y | s`.
pub trait CiTest {
    fn n_vars(&self) -> usize;
    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> CiTestResult;
}

/// Statistic and degrees of freedom of `x ⟂ y | s` on `d`, with listwise
/// deletion of rows missing any of the involved variables.
///
/// Each stratum (configuration of `s`) contributes `(rx - 1)(ry - 1)`
/// degrees of freedom, where `rx` and `ry` count the rows and columns of its
/// `x × y` table with a positive margin.
pub fn ci_statistic(d: &Dataset, x: usize, y: usize, s: &[usize], kind: TestKind) -> (f64, usize) {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let strata = stratify(d, s);
    let (xs, ys) = (d.column(x), d.column(y));
    let (kx, ky) = (d.arity(x), d.arity(y));

    // counting sort of usable rows by stratum
    let mut start = vec![0usize; strata.count + 1];
    let usable = |r: usize| strata.ids[r] != EXCLUDED && xs[r] != MISSING && ys[r] != MISSING;
    for r in 0..d.n_rows() {
        if usable(r) {
            start[strata.ids[r] as usize + 1] += 1;
        }
    }
    for i in 0..strata.count {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut order = vec![0usize; start[strata.count]];
    for r in 0..d.n_rows() {
        if usable(r) {
            let k = strata.ids[r] as usize;
            order[fill[k]] = r;
            fill[k] += 1;
        }
    }

    let mut table = vec![0u32; kx * ky];
    let mut row_m = vec![0u32; kx];
    let mut col_m = vec![0u32; ky];
    let mut stat = 0.0;
    let mut dof = 0usize;
    for k in 0..strata.count {
        let rows = &order[start[k]..start[k + 1]];
        if rows.is_empty() {
            continue;
        }
        table.iter_mut().for_each(|c| *c = 0);
        row_m.iter_mut().for_each(|c| *c = 0);
        col_m.iter_mut().for_each(|c| *c = 0);
        for &r in rows {
            let (a, b) = (xs[r] as usize, ys[r] as usize);
            table[a * ky + b] += 1;
            row_m[a] += 1;
            col_m[b] += 1;
        }
        let n = rows.len() as f64;
        let rx = row_m.iter().filter(|&&c| c > 0).count();
        let ry = col_m.iter().filter(|&&c| c > 0).count();
        dof += (rx.saturating_sub(1)) * (ry.saturating_sub(1));
        for a in 0..kx {
            if row_m[a] == 0 {
                continue;
            }
            for b in 0..ky {
                if col_m[b] == 0 {
                    continue;
                }
                let o = table[a * ky + b] as f64;
                let e = row_m[a] as f64 * col_m[b] as f64 / n;
                stat += match kind {
                    TestKind::G2 if o > 0.0 => 2.0 * o * (o / e).ln(),
                    TestKind::G2 => 0.0,
                    TestKind::Chi2 => (o - e) * (o - e) / e,
                };
            }
        }
    }
    (stat.max(0.0), dof)
}

/// One test call on data.
pub fn ci_test(d: &Dataset, x: usize, y: usize, s: &[usize], alpha: f64, kind: TestKind) -> CiTestResult {
    let (stat, dof) = ci_statistic(d, x, y, s, kind);
    CiTestResult::from_stat(stat, dof, alpha)
}

type CacheKey = (usize, usize, Vec<usize>);

/// Data-backed test with a per-instance result cache.
pub struct DataCiTest<'a> {
    data: &'a Dataset,
    alpha: f64,
    kind: TestKind,
    cache: RefCell<HashMap<CacheKey, CiTestResult>>,
}

impl<'a> DataCiTest<'a> {
    pub fn new(data: &'a Dataset, alpha: f64, kind: TestKind) -> Self {
        DataCiTest { data, alpha, kind, cache: RefCell::new(HashMap::new()) }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn calls(&self) -> usize {
        self.cache.borrow().len()
    }
}

impl CiTest for DataCiTest<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> CiTestResult {
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        let key = (x.min(y), x.max(y), sorted);
        if let Some(r) = self.cache.borrow().get(&key) {
            return *r;
        }
        let r = ci_test(self.data, key.0, key.1, &key.2, self.alpha, self.kind);
        self.cache.borrow_mut().insert(key, r);
        r
    }
}

/// Whether `x` and `y` are d-separated by `s` in a DAG (reachability over
/// active trails).
pub fn d_separated(dag: &MixedGraph, x: NodeId, y: NodeId, s: &[NodeId]) -> bool {
    let n = dag.n();
    let mut in_s = vec![false; n];
    for &v in s {
        in_s[v] = true;
    }
    // ancestors of s, s included
    let mut anc = in_s.clone();
    let mut stack: Vec<NodeId> = s.to_vec();
    while let Some(v) = stack.pop() {
        for p in dag.parents(v) {
            if !anc[p] {
                anc[p] = true;
                stack.push(p);
            }
        }
    }
    // (node, arrived from a child)
    let mut seen = vec![[false; 2]; n];
    let mut stack = vec![(x, true)];
    while let Some((v, up)) = stack.pop() {
        if std::mem::replace(&mut seen[v][up as usize], true) {
            continue;
        }
        if v == y && !in_s[v] {
            return false;
        }
        if up {
            if !in_s[v] {
                stack.extend(dag.parents(v).into_iter().map(|p| (p, true)));
                stack.extend(dag.children(v).into_iter().map(|c| (c, false)));
            }
        } else {
            if !in_s[v] {
                stack.extend(dag.children(v).into_iter().map(|c| (c, false)));
            }
            if anc[v] {
                stack.extend(dag.parents(v).into_iter().map(|p| (p, true)));
            }
        }
    }
    true
}

/// Test result from d-separation: `p = 1` if separated, else `p = 0`.
pub fn dsep_oracle(dag: &MixedGraph, x: NodeId, y: NodeId, s: &[NodeId]) -> CiTestResult {
    let sep = d_separated(dag, x, y, s);
    CiTestResult {
        statistic: if sep { 0.0 } else { f64::INFINITY },
        dof: 0,
        p_value: if sep { 1.0 } else { 0.0 },
        independent: sep,
        low_power: false,
    }
}

/// d-separation oracle over a known DAG.
#[derive(Debug, Clone)]
pub struct DsepOracle {
    dag: MixedGraph,
}

impl DsepOracle {
    pub fn new(dag: MixedGraph) -> Self {
        DsepOracle { dag }
    }

    pub fn dag(&self) -> &MixedGraph {
        &self.dag
    }
}

impl CiTest for DsepOracle {
    fn n_vars(&self) -> usize {
        self.dag.n()
    }

    fn test(&self, x: NodeId, y: NodeId, s: &[NodeId]) -> CiTestResult {
        dsep_oracle(&self.dag, x, y, s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sepset {
    pub set: Vec<NodeId>,
    pub p_value: f64,
}

/// Conditioning sets that removed adjacencies, keyed by unordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SepsetMap {
    map: BTreeMap<(NodeId, NodeId), Sepset>,
}

impl SepsetMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: NodeId, y: NodeId, set: Vec<NodeId>, p_value: f64) {
        self.map.insert((x.min(y), x.max(y)), Sepset { set, p_value });
    }

    pub fn get(&self, x: NodeId, y: NodeId) -> Option<&Sepset> {
        self.map.get(&(x.min(y), x.max(y)))
    }

    /// Whether `z` is in the recorded separating set of `x` and `y`.
    pub fn separates_with(&self, x: NodeId, y: NodeId, z: NodeId) -> Option<bool> {
        self.get(x, y).map(|s| s.set.contains(&z))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Sepset)> {
        self.map.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variable;
    use approx::assert_relative_eq;

    fn table_data(cells: [[u32; 2]; 2]) -> Dataset {
        let mut rows = Vec::new();
        for (a, row) in cells.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    rows.push(vec![a as u8, b as u8]);
                }
            }
        }
        let vars = vec![Variable::indexed("x", 2).unwrap(), Variable::indexed("y", 2).unwrap()];
        Dataset::from_rows(vars, &rows).unwrap()
    }

    #[test]
    fn exact_independence() {
        let d = table_data([[25, 25], [25, 25]]);
        let r = ci_test(&d, 0, 1, &[], 0.01, TestKind::G2);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 1);
        assert_eq!(r.p_value, 1.0);
        assert!(r.independent);
    }

    #[test]
    fn perfect_dependence_g2() {
        let d = table_data([[50, 0], [0, 50]]);
        let r = ci_test(&d, 0, 1, &[], 0.01, TestKind::G2);
        // 2 · (50 ln 2 + 50 ln 2)
        assert_relative_eq!(r.statistic, 2.0 * 100.0 * 2f64.ln(), max_relative = 1e-12);
        assert!(r.p_value < 1e-6);
        assert!(!r.independent);

        let p = ci_test(&d, 0, 1, &[], 0.01, TestKind::Chi2);
        // every cell deviates by 25 from an expectation of 25
        assert_relative_eq!(p.statistic, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_strata_reduce_dof() {
        // y is constant within the data: no degrees of freedom left
        let d = table_data([[10, 0], [7, 0]]);
        let r = ci_test(&d, 0, 1, &[], 0.01, TestKind::G2);
        assert_eq!(r.dof, 0);
        assert!(r.low_power && r.independent);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn d_separation_examples() {
        let mut chain = MixedGraph::new(["A", "B", "C"]).unwrap();
        chain.add_directed(0, 1);
        chain.add_directed(1, 2);
        assert!(dsep_oracle(&chain, 0, 2, &[1]).independent);
        assert!(!dsep_oracle(&chain, 0, 2, &[]).independent);

        let mut col = MixedGraph::new(["A", "B", "C"]).unwrap();
        col.add_directed(0, 1);
        col.add_directed(2, 1);
        assert!(!dsep_oracle(&col, 0, 2, &[1]).independent);
        assert!(dsep_oracle(&col, 0, 2, &[]).independent);
    }

    #[test]
    fn conditioning_on_descendant_of_collider_connects() {
        let mut g = MixedGraph::with_nodes(4);
        g.add_directed(0, 1);
        g.add_directed(2, 1);
        g.add_directed(1, 3);
        assert!(d_separated(&g, 0, 2, &[]));
        assert!(!d_separated(&g, 0, 2, &[3]));
    }

    #[test]
    fn sepset_map_is_unordered() {
        let mut m = SepsetMap::new();
        m.insert(3, 1, vec![2], 0.4);
        assert_eq!(m.get(1, 3).unwrap().set, vec![2]);
        assert_eq!(m.separates_with(3, 1, 2), Some(true));
        assert_eq!(m.separates_with(0, 1, 2), None);
    }
}
