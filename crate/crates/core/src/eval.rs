//! Graph comparison (arc counts, DDM, SHD) and predictive metrics (AUC, CC).

use crate::error::{Error, Result};
use crate::graph::{MixedGraph, NodeId};
use crate::model::Prediction;
use std::collections::HashMap;

/// Arc counts of a learned DAG against a reference DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArcComparison {
    pub m: usize,
    pub r: usize,
    pub a: usize,
    pub d: usize,
    pub t: usize,
}

fn same_nodes(a: &MixedGraph, b: &MixedGraph) -> Result<()> {
    if a.names() != b.names() {
        return Err(Error::NodeMismatch);
    }
    Ok(())
}

/// Each reference arc is matched, reversed or deleted; learned arcs on
/// pairs the reference leaves unconnected are added.
pub fn arc_comparison(learned: &MixedGraph, reference: &MixedGraph) -> Result<ArcComparison> {
    same_nodes(learned, reference)?;
    learned.require_directed()?;
    reference.require_directed()?;
    let mut c = ArcComparison::default();
    for (u, v) in reference.skeleton() {
        let (from, to) = if reference.is_directed(u, v) { (u, v) } else { (v, u) };
        c.t += 1;
        if learned.is_directed(from, to) {
            c.m += 1;
        } else if learned.is_directed(to, from) {
            c.r += 1;
        } else {
            c.d += 1;
        }
    }
    c.a = learned.skeleton().into_iter().filter(|&(u, v)| !reference.is_adjacent(u, v)).count();
    debug_assert_eq!(c.m + c.r + c.d, c.t);
    Ok(c)
}

/// `(m + r/2 - a - d) / t`; 1 for perfect agreement, unbounded below.
pub fn ddm(c: &ArcComparison) -> Result<f64> {
    if c.t == 0 {
        return Err(Error::NoReferenceArcs);
    }
    Ok((c.m as f64 + c.r as f64 / 2.0 - c.a as f64 - c.d as f64) / c.t as f64)
}

/// Structural Hamming distance: pairs adjacent in exactly one graph plus
/// shared adjacencies whose marks differ.
pub fn shd(learned: &MixedGraph, reference: &MixedGraph) -> Result<usize> {
    same_nodes(learned, reference)?;
    let n = learned.n();
    let mut out = 0;
    for i in 0..n {
        for j in i + 1..n {
            match (learned.is_adjacent(i, j), reference.is_adjacent(i, j)) {
                (true, true) => {
                    if learned.edge(i, j) != reference.edge(i, j) {
                        out += 1;
                    }
                }
                (false, false) => {}
                _ => out += 1,
            }
        }
    }
    Ok(out)
}

/// Mann–Whitney AUC of `scores` for the rows flagged in `positive`, with
/// tied scores given their mid-rank. `None` without both classes.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * idx[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// ROC points `(false positive rate, true positive rate)` from the highest
/// threshold down, tied scores taken together.
pub fn roc_points(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = positive.iter().filter(|&&p| p).count().max(1) as f64;
    let n_neg = positive.iter().filter(|&&p| !p).count().max(1) as f64;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if positive[idx[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((fp as f64 / n_neg, tp as f64 / n_pos));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Auc {
    /// One-vs-rest AUC per state; `None` when a class is absent.
    pub per_state: Vec<Option<f64>>,
    /// Prevalence-weighted mean of the defined per-state values.
    pub summary: Option<f64>,
}

/// One-vs-rest AUC for every state of a multinomial target.
pub fn auc_ovr(posteriors: &[&[f64]], labels: &[u8], arity: usize) -> Result<Auc> {
    if posteriors.len() != labels.len() {
        return Err(Error::Invalid("posterior and label counts differ".into()));
    }
    if let Some(p) = posteriors.iter().find(|p| p.len() != arity) {
        return Err(Error::Invalid(format!("posterior of length {} for arity {arity}", p.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= arity) {
        return Err(Error::Invalid(format!("label {l} out of range for arity {arity}")));
    }
    let n = labels.len() as f64;
    let mut per_state = Vec::with_capacity(arity);
    let (mut num, mut den) = (0.0, 0.0);
    for s in 0..arity {
        let scores: Vec<f64> = posteriors.iter().map(|p| p[s]).collect();
        let positive: Vec<bool> = labels.iter().map(|&l| l as usize == s).collect();
        let auc = binary_auc(&scores, &positive);
        if let Some(v) = auc {
            let w = positive.iter().filter(|&&p| p).count() as f64 / n;
            num += w * v;
            den += w;
        }
        per_state.push(auc);
    }
    Ok(Auc { per_state, summary: (den > 0.0).then(|| num / den) })
}

/// Percentage of predictions equal to the label.
pub fn cc(predicted: &[u8], labels: &[u8]) -> Result<f64> {
    if predicted.len() != labels.len() {
        return Err(Error::Invalid("prediction and label counts differ".into()));
    }
    if predicted.is_empty() {
        return Err(Error::NothingScored);
    }
    let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(100.0 * correct as f64 / predicted.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub target: NodeId,
    pub per_state_auc: Vec<Option<f64>>,
    /// `None` when every scored row has the same label.
    pub summary_auc: Option<f64>,
    pub cc: f64,
    pub scored_rows: usize,
    pub excluded_rows: usize,
}

pub fn prediction_report(p: &Prediction, arity: usize) -> Result<PredictionReport> {
    let (mut post, mut labels, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
    for ((q, &l), &y) in p.posteriors.iter().zip(&p.labels).zip(&p.predicted) {
        if let (Some(q), Some(y)) = (q, y) {
            if l != crate::data::MISSING {
                post.push(q.as_slice());
                labels.push(l);
                predicted.push(y);
            }
        }
    }
    let auc = auc_ovr(&post, &labels, arity)?;
    Ok(PredictionReport {
        target: p.target,
        per_state_auc: auc.per_state,
        summary_auc: auc.summary,
        cc: cc(&predicted, &labels)?,
        scored_rows: labels.len(),
        excluded_rows: p.excluded_rows(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub model: String,
    /// Tests in which the model was in the top `k` (ties included).
    pub in_top: usize,
    /// Tests in which the model had a value.
    pub tests: usize,
    pub percent: f64,
}

/// How often each model lands in the top `k` over a set of tests. A test
/// is a list of `(model, value)`; all models tied with the `k`-th value
/// count as top. Non-finite values and absent models do not count towards
/// a model's denominator. Rows follow first appearance.
pub fn rank_summary(tests: &[Vec<(String, f64)>], k: usize, higher_is_better: bool) -> Vec<RankRow> {
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, (usize, usize)> = HashMap::new();
    for test in tests {
        let mut vals: Vec<f64> = test.iter().map(|(_, v)| *v).filter(|v| v.is_finite()).collect();
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(|a, b| if higher_is_better { b.total_cmp(a) } else { a.total_cmp(b) });
        let cut = vals[k.min(vals.len()).max(1) - 1];
        for (model, v) in test {
            if !rows.contains_key(model) {
                order.push(model.clone());
                rows.insert(model.clone(), (0, 0));
            }
            if !v.is_finite() {
                continue;
            }
            let e = rows.get_mut(model).unwrap();
            e.1 += 1;
            let top = if higher_is_better { *v >= cut } else { *v <= cut };
            if top {
                e.0 += 1;
            }
        }
    }
    order
        .into_iter()
        .map(|model| {
            let (in_top, tests) = rows[&model];
            let percent = if tests == 0 { 0.0 } else { 100.0 * in_top as f64 / tests as f64 };
            RankRow { model, in_top, tests, percent }
        })
        .collect()
}
