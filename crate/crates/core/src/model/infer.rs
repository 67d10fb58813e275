//! Exact inference by variable elimination.

use super::DiscreteBn;
use crate::data::{Dataset, MISSING};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use std::collections::HashMap;

/// A table over a sorted set of variables, last variable fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    vars: Vec<NodeId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn scalar(v: f64) -> Self {
        Factor { vars: vec![], cards: vec![], values: vec![v] }
    }

    pub fn vars(&self) -> &[NodeId] {
        &self.vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.cards[i + 1];
        }
        s
    }

    /// Strides of `self` laid out against another variable list.
    fn strides_in(&self, vars: &[NodeId]) -> Vec<usize> {
        let own = self.strides();
        vars.iter()
            .map(|v| self.vars.iter().position(|u| u == v).map_or(0, |p| own[p]))
            .collect()
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(v) {
                vars.push(*v);
                cards.push(*c);
            }
        }
        let mut pairs: Vec<(NodeId, usize)> = vars.into_iter().zip(cards).collect();
        pairs.sort_unstable();
        let (vars, cards): (Vec<NodeId>, Vec<usize>) = pairs.into_iter().unzip();
        let sa = self.strides_in(&vars);
        let sb = other.strides_in(&vars);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut assign = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for p in (0..vars.len()).rev() {
                assign[p] += 1;
                ia += sa[p];
                ib += sb[p];
                if assign[p] < cards[p] {
                    break;
                }
                ia -= sa[p] * cards[p];
                ib -= sb[p] * cards[p];
                assign[p] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    pub fn sum_out(&self, v: NodeId) -> Factor {
        let Some(pos) = self.vars.iter().position(|&u| u == v) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let out = Factor { values: vec![0.0; cards.iter().product()], vars, cards };
        let st = out.strides_in(&self.vars);
        let mut values = out.values;
        let mut assign = vec![0usize; self.vars.len()];
        let mut io = 0usize;
        for &x in &self.values {
            values[io] += x;
            for p in (0..self.vars.len()).rev() {
                assign[p] += 1;
                io += st[p];
                if assign[p] < self.cards[p] {
                    break;
                }
                io -= st[p] * self.cards[p];
                assign[p] = 0;
            }
        }
        Factor { values, ..out }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Family factor of `node`'s CPT with observed variables fixed.
    fn from_cpt(bn: &DiscreteBn, node: NodeId, evidence: &[Option<u8>]) -> Factor {
        let cpt = bn.cpt(node);
        let mut family: Vec<NodeId> = cpt.parents().to_vec();
        family.push(node);
        let mut vars: Vec<NodeId> = family.iter().copied().filter(|&v| evidence[v].is_none()).collect();
        vars.sort_unstable();
        let arities = bn.arities();
        let cards: Vec<usize> = vars.iter().map(|&v| arities[v]).collect();
        let mut assign: Vec<u8> = evidence.iter().map(|e| e.unwrap_or(0)).collect();
        for &v in &vars {
            assign[v] = 0;
        }
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            values.push(cpt.prob(&assign));
            for p in (0..vars.len()).rev() {
                assign[vars[p]] += 1;
                if (assign[vars[p]] as usize) < cards[p] {
                    break;
                }
                assign[vars[p]] = 0;
            }
        }
        Factor { vars, cards, values }
    }
}

fn describe(bn: &DiscreteBn, evidence: &[Option<u8>]) -> String {
    evidence
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|s| format!("{}={}", bn.variables()[i].name, bn.variables()[i].states[s as usize])))
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_evidence(bn: &DiscreteBn, evidence: &[Option<u8>]) -> Result<()> {
    if evidence.len() != bn.n() {
        return Err(Error::Invalid(format!("evidence has {} entries for {} nodes", evidence.len(), bn.n())));
    }
    for (i, e) in evidence.iter().enumerate() {
        if let Some(s) = e {
            if *s as usize >= bn.variables()[i].arity() {
                return Err(Error::Invalid(format!("state {s} out of range for {:?}", bn.variables()[i].name)));
            }
        }
    }
    Ok(())
}

/// Joint posterior over `query` given `evidence`, plus `P(evidence)`.
///
/// Nodes that are not ancestors of the query or evidence are pruned. Hidden
/// variables are eliminated in `order` when given (missing ones appended in
/// index order), otherwise by a greedy minimum-degree rule with ties going
/// to the lowest index.
pub fn posterior(bn: &DiscreteBn, query: &[NodeId], evidence: &[Option<u8>], order: Option<&[NodeId]>) -> Result<(Factor, f64)> {
    check_evidence(bn, evidence)?;
    let n = bn.n();
    let mut relevant = vec![false; n];
    let mut stack: Vec<NodeId> = query.iter().copied().chain((0..n).filter(|&i| evidence[i].is_some())).collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut relevant[v], true) {
            continue;
        }
        stack.extend(bn.cpt(v).parents().iter().copied());
    }
    let mut factors: Vec<Factor> = (0..n).filter(|&i| relevant[i]).map(|i| Factor::from_cpt(bn, i, evidence)).collect();
    let mut hidden: Vec<NodeId> = (0..n).filter(|&i| relevant[i] && evidence[i].is_none() && !query.contains(&i)).collect();

    let next_var = |factors: &[Factor], hidden: &mut Vec<NodeId>| -> NodeId {
        if let Some(order) = order {
            if let Some(&v) = order.iter().find(|v| hidden.contains(v)) {
                hidden.retain(|&h| h != v);
                return v;
            }
            return hidden.remove(0);
        }
        let degree = |v: NodeId| {
            let mut nb: Vec<NodeId> = factors.iter().filter(|f| f.vars.contains(&v)).flat_map(|f| f.vars.iter().copied()).collect();
            nb.sort_unstable();
            nb.dedup();
            nb.len()
        };
        let (pos, _) = hidden.iter().enumerate().min_by_key(|(_, &v)| (degree(v), v)).expect("non-empty");
        hidden.remove(pos)
    };

    while !hidden.is_empty() {
        let v = next_var(&factors, &mut hidden);
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = without;
        if let Some(first) = with.first() {
            let prod = with[1..].iter().fold(first.clone(), |acc, f| acc.product(f));
            factors.push(prod.sum_out(v));
        }
    }
    let joint = factors.iter().fold(Factor::scalar(1.0), |acc, f| acc.product(f));
    let z = joint.sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::ImpossibleEvidence(describe(bn, evidence)));
    }
    let values = joint.values.iter().map(|v| v / z).collect();
    Ok((Factor { values, ..joint }, z))
}

/// `P(target | evidence)` by variable elimination.
pub fn eliminate(bn: &DiscreteBn, target: NodeId, evidence: &[Option<u8>]) -> Result<Vec<f64>> {
    eliminate_inner(bn, target, evidence, None)
}

/// As [`eliminate`], with an explicit elimination order.
pub fn eliminate_with_order(bn: &DiscreteBn, target: NodeId, evidence: &[Option<u8>], order: &[NodeId]) -> Result<Vec<f64>> {
    eliminate_inner(bn, target, evidence, Some(order))
}

fn eliminate_inner(bn: &DiscreteBn, target: NodeId, evidence: &[Option<u8>], order: Option<&[NodeId]>) -> Result<Vec<f64>> {
    if evidence.get(target).is_some_and(Option::is_some) {
        return Err(Error::Invalid("evidence includes the target".into()));
    }
    let (f, _) = posterior(bn, &[target], evidence, order)?;
    Ok(f.values)
}

/// Per-row posteriors of one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub target: NodeId,
    /// `None` for rows whose evidence has zero probability.
    pub posteriors: Vec<Option<Vec<f64>>>,
    /// Argmax state, lowest index on ties.
    pub predicted: Vec<Option<u8>>,
    /// Observed target state per row ([`MISSING`] when absent).
    pub labels: Vec<u8>,
    pub impossible_rows: usize,
}

impl Prediction {
    /// `(posterior, label)` for rows with a usable posterior and label.
    pub fn scored(&self) -> impl Iterator<Item = (&[f64], u8)> {
        self.posteriors
            .iter()
            .zip(&self.labels)
            .filter_map(|(p, &l)| p.as_deref().filter(|_| l != MISSING).map(|p| (p, l)))
    }

    /// Rows not scored: impossible evidence or missing label.
    pub fn excluded_rows(&self) -> usize {
        self.posteriors.iter().zip(&self.labels).filter(|(p, &l)| p.is_none() || l == MISSING).count()
    }
}

/// Posterior of `target` for every row of `d`, using all other model
/// variables' observed values as evidence. Columns are matched by name.
pub fn predict(bn: &DiscreteBn, d: &Dataset, target: NodeId) -> Result<Prediction> {
    if target >= bn.n() {
        return Err(Error::Invalid(format!("target {target} out of range")));
    }
    let cols = crate::score::column_map(bn, d)?;
    let mut cache: HashMap<Vec<Option<u8>>, Option<Vec<f64>>> = HashMap::new();
    let mut out = Prediction { target, posteriors: vec![], predicted: vec![], labels: vec![], impossible_rows: 0 };
    for r in 0..d.n_rows() {
        let evidence: Vec<Option<u8>> = cols
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == target { None } else { Some(d.value(r, c)).filter(|&v| v != MISSING) })
            .collect();
        let post = match cache.get(&evidence) {
            Some(p) => p.clone(),
            None => {
                let p = match eliminate(bn, target, &evidence) {
                    Ok(p) => Some(p),
                    Err(Error::ImpossibleEvidence(_)) => None,
                    Err(e) => return Err(e),
                };
                cache.insert(evidence, p.clone());
                p
            }
        };
        if post.is_none() {
            out.impossible_rows += 1;
        }
        out.predicted.push(post.as_ref().map(|p| argmax(p)));
        out.posteriors.push(post);
        out.labels.push(d.value(r, cols[target]));
    }
    Ok(out)
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(p: &[f64]) -> u8 {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best as u8
}
