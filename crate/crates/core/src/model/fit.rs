//! Parameter learning: maximum likelihood and EM.

use super::infer::posterior;
use super::{checked_rows, Cpt, DiscreteBn};
use crate::data::{Dataset, Variable, MISSING};
use crate::error::{Error, Result};
use crate::graph::{MixedGraph, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Data column of every graph node, matched by name.
fn node_columns(g: &MixedGraph, d: &Dataset) -> Result<Vec<usize>> {
    (0..g.n())
        .map(|i| d.index_of(g.name(i)).ok_or_else(|| Error::UnknownNode(g.name(i).to_string())))
        .collect()
}

fn blank_cpts(g: &MixedGraph, vars: &[Variable]) -> Result<Vec<(Vec<NodeId>, Vec<usize>, usize)>> {
    (0..g.n())
        .map(|i| {
            let parents = g.parents(i);
            let pa: Vec<usize> = parents.iter().map(|&p| vars[p].arity()).collect();
            let k = vars[i].arity();
            let rows = checked_rows(&pa, k).ok_or_else(|| {
                let size = pa.iter().fold(k as u128, |a, &b| a.saturating_mul(b as u128));
                Error::CptTooLarge(vars[i].name.clone(), size)
            })?;
            let _ = rows;
            Ok((parents, pa, k))
        })
        .collect()
}

/// Normalises expected counts row by row. Rows with no mass (and no
/// pseudocount) become uniform; the number of such rows is returned.
fn normalise(counts: &[f64], k: usize, pseudocount: f64) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(counts.len());
    let mut uniform = 0;
    for row in counts.chunks(k) {
        let total: f64 = row.iter().sum::<f64>() + k as f64 * pseudocount;
        if total > 0.0 {
            out.extend(row.iter().map(|c| (c + pseudocount) / total));
        } else {
            uniform += 1;
            out.extend(std::iter::repeat_n(1.0 / k as f64, k));
        }
    }
    (out, uniform)
}

#[derive(Debug, Clone)]
pub struct MleFit {
    pub bn: DiscreteBn,
    /// CPT rows with no data (and zero pseudocount), set to uniform.
    pub uniform_rows: usize,
}

/// Maximum-likelihood CPTs with an optional pseudocount per cell.
pub fn mle_fit(g: &MixedGraph, d: &Dataset, pseudocount: f64) -> Result<MleFit> {
    g.require_directed()?;
    if !crate::graph::directed_part_is_acyclic(g) {
        return Err(Error::Cyclic);
    }
    if !(pseudocount >= 0.0) {
        return Err(Error::Invalid(format!("pseudocount {pseudocount}")));
    }
    let cols = node_columns(g, d)?;
    let vars: Vec<Variable> = cols.iter().map(|&c| d.variable(c).clone()).collect();
    if cols.iter().any(|&c| d.column(c).contains(&MISSING)) {
        return Err(Error::MissingData("maximum-likelihood fitting"));
    }
    let shapes = blank_cpts(g, &vars)?;
    let mut cpts = Vec::with_capacity(g.n());
    let mut uniform_rows = 0;
    for (i, (parents, pa, k)) in shapes.into_iter().enumerate() {
        let q: usize = pa.iter().product();
        let mut counts = vec![0.0; q * k];
        let node_col = d.column(cols[i]);
        for r in 0..d.n_rows() {
            let j = parents.iter().zip(&pa).fold(0, |acc, (&p, &kp)| acc * kp + d.value(r, cols[p]) as usize);
            counts[j * k + node_col[r] as usize] += 1.0;
        }
        let (table, u) = normalise(&counts, k, pseudocount);
        uniform_rows += u;
        cpts.push(Cpt { node: i, parents, parent_arities: pa, arity: k, table });
    }
    Ok(MleFit { bn: DiscreteBn::new(g.clone(), vars, cpts)?, uniform_rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop once no CPT entry moves by more than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { tol: 1e-4, max_iter: 200, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub bn: DiscreteBn,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood at the start of each iteration.
    pub loglik_trace: Vec<f64>,
    /// Whether the trace never decreased (up to rounding).
    pub monotone: bool,
    /// Columns with no observed value; their CPTs stay at the start point.
    pub unobserved: Vec<String>,
    /// Rows skipped because their evidence had zero probability.
    pub impossible_rows: u64,
}

const JITTER: f64 = 0.01;

/// Expectation-maximisation under a missing-at-random assumption.
///
/// CPTs start uniform with seeded jitter. The E-step computes each
/// record's expected family counts by exact inference over its missing
/// cells; identical records are processed once.
pub fn em_fit(g: &MixedGraph, d: &Dataset, opts: EmOptions) -> Result<EmFit> {
    g.require_directed()?;
    if !crate::graph::directed_part_is_acyclic(g) {
        return Err(Error::Cyclic);
    }
    let cols = node_columns(g, d)?;
    let vars: Vec<Variable> = cols.iter().map(|&c| d.variable(c).clone()).collect();
    let unobserved: Vec<String> = cols
        .iter()
        .filter(|&&c| d.column(c).iter().all(|&v| v == MISSING))
        .map(|&c| d.variable(c).name.clone())
        .collect();

    if cols.iter().all(|&c| !d.column(c).contains(&MISSING)) {
        let fit = mle_fit(g, d, 0.0)?;
        let ll = loglik(&fit.bn, d)?.value;
        return Ok(EmFit {
            bn: fit.bn,
            iterations: 1,
            converged: true,
            loglik_trace: vec![ll],
            monotone: true,
            unobserved,
            impossible_rows: 0,
        });
    }

    let shapes = blank_cpts(g, &vars)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cpts: Vec<Cpt> = shapes
        .into_iter()
        .enumerate()
        .map(|(i, (parents, pa, k))| {
            let q: usize = pa.iter().product();
            let mut table = Vec::with_capacity(q * k);
            for _ in 0..q {
                let row: Vec<f64> = (0..k).map(|_| 1.0 / k as f64 + JITTER * rng.random::<f64>()).collect();
                let s: f64 = row.iter().sum();
                table.extend(row.into_iter().map(|v| v / s));
            }
            Cpt { node: i, parents, parent_arities: pa, arity: k, table }
        })
        .collect();

    let mut patterns: HashMap<Vec<u8>, u64> = HashMap::new();
    for r in 0..d.n_rows() {
        *patterns.entry(cols.iter().map(|&c| d.value(r, c)).collect()).or_insert(0) += 1;
    }
    let mut patterns: Vec<(Vec<u8>, u64)> = patterns.into_iter().collect();
    patterns.sort_unstable();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut impossible_rows = 0;
    for _ in 0..opts.max_iter {
        iterations += 1;
        let bn = DiscreteBn { graph: g.clone(), variables: vars.clone(), order: crate::graph::topological_order(g).expect("acyclic"), cpts: cpts.clone() };
        let (counts, ll, impossible) = expected_counts(&bn, &patterns)?;
        impossible_rows = impossible;
        trace.push(ll);
        let mut change: f64 = 0.0;
        for (cpt, c) in cpts.iter_mut().zip(counts) {
            let (table, _) = normalise(&c, cpt.arity, 0.0);
            for (old, new) in cpt.table_mut().iter_mut().zip(table) {
                change = change.max((*old - new).abs());
                *old = new;
            }
        }
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let monotone = trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    debug_assert!(monotone, "EM log-likelihood decreased: {trace:?}");
    let bn = DiscreteBn::new(g.clone(), vars, cpts)?;
    Ok(EmFit { bn, iterations, converged, loglik_trace: trace, monotone, unobserved, impossible_rows })
}

/// Enumerate the joint over a record's missing cells when it has at most
/// this many configurations; otherwise query each family separately.
const JOINT_LIMIT: usize = 256;

fn expected_counts(bn: &DiscreteBn, patterns: &[(Vec<u8>, u64)]) -> Result<(Vec<Vec<f64>>, f64, u64)> {
    let n = bn.n();
    let arities = bn.arities();
    let mut counts: Vec<Vec<f64>> = bn.cpts().iter().map(|c| vec![0.0; c.table().len()]).collect();
    let mut ll = 0.0;
    let mut impossible = 0;
    for (row, w) in patterns {
        let w = *w as f64;
        let missing: Vec<NodeId> = (0..n).filter(|&i| row[i] == MISSING).collect();
        if missing.is_empty() {
            ll += w * bn.joint_probability(row).ln();
            for (i, c) in bn.cpts().iter().enumerate() {
                counts[i][c.config_of(row) * c.arity() + row[i] as usize] += w;
            }
            continue;
        }
        let evidence: Vec<Option<u8>> = row.iter().map(|&v| (v != MISSING).then_some(v)).collect();
        let touched: Vec<NodeId> = (0..n)
            .filter(|&i| row[i] == MISSING || bn.cpt(i).parents().iter().any(|&p| row[p] == MISSING))
            .collect();
        for (i, c) in bn.cpts().iter().enumerate() {
            if !touched.contains(&i) {
                counts[i][c.config_of(row) * c.arity() + row[i] as usize] += w;
            }
        }
        let joint_size: usize = missing.iter().map(|&m| arities[m]).product();
        let mut filled = row.clone();
        if joint_size <= JOINT_LIMIT {
            let (f, z) = match posterior(bn, &missing, &evidence, None) {
                Ok(r) => r,
                Err(Error::ImpossibleEvidence(_)) => {
                    impossible += *patterns.iter().find(|p| &p.0 == row).map(|p| &p.1).unwrap_or(&0);
                    continue;
                }
                Err(e) => return Err(e),
            };
            ll += w * z.ln();
            accumulate(bn, &touched, f.vars(), f.values(), &mut filled, w, &mut counts, &arities);
        } else {
            let mut z_seen = None;
            for &i in &touched {
                let mut fam: Vec<NodeId> = bn.cpt(i).parents().iter().copied().chain([i]).filter(|&v| row[v] == MISSING).collect();
                fam.sort_unstable();
                let (f, z) = match posterior(bn, &fam, &evidence, None) {
                    Ok(r) => r,
                    Err(Error::ImpossibleEvidence(_)) => {
                        z_seen = Some(0.0);
                        break;
                    }
                    Err(e) => return Err(e),
                };
                z_seen.get_or_insert(z);
                accumulate(bn, &[i], f.vars(), f.values(), &mut filled, w, &mut counts, &arities);
            }
            match z_seen {
                Some(z) if z > 0.0 => ll += w * z.ln(),
                _ => impossible += w as u64,
            }
        }
    }
    Ok((counts, ll, impossible))
}

/// Adds `w · P(assignment)` to the family counts of `nodes` for every
/// assignment of `vars` in a posterior table.
#[allow(clippy::too_many_arguments)]
fn accumulate(
    bn: &DiscreteBn,
    nodes: &[NodeId],
    vars: &[NodeId],
    probs: &[f64],
    filled: &mut [u8],
    w: f64,
    counts: &mut [Vec<f64>],
    arities: &[usize],
) {
    for &v in vars {
        filled[v] = 0;
    }
    for &p in probs {
        if p > 0.0 {
            for &i in nodes {
                let c = bn.cpt(i);
                counts[i][c.config_of(filled) * c.arity() + filled[i] as usize] += w * p;
            }
        }
        for k in (0..vars.len()).rev() {
            filled[vars[k]] += 1;
            if (filled[vars[k]] as usize) < arities[vars[k]] {
                break;
            }
            filled[vars[k]] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub value: f64,
    /// Cells whose conditional probability was zero.
    pub zero_probability_cells: usize,
}

/// `Σ_rows Σ_nodes ln P(x_i | pa_i)` on complete data.
pub fn loglik(bn: &DiscreteBn, d: &Dataset) -> Result<LogLik> {
    let cols = crate::score::column_map(bn, d)?;
    let mut out = LogLik { value: 0.0, zero_probability_cells: 0 };
    let mut row = vec![0u8; bn.n()];
    for r in 0..d.n_rows() {
        for (i, &c) in cols.iter().enumerate() {
            row[i] = d.value(r, c);
            if row[i] == MISSING {
                return Err(Error::MissingData("log-likelihood"));
            }
        }
        for c in bn.cpts() {
            let p = c.prob(&row);
            if p > 0.0 {
                out.value += p.ln();
            } else {
                out.zero_probability_cells += 1;
                out.value = f64::NEG_INFINITY;
            }
        }
    }
    Ok(out)
}
