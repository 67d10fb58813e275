//! The benchmark pipeline: learn, orient, fit, score and predict for every
//! test, missing-data policy and algorithm.

use crate::config::{AlgorithmRun, ExperimentConfig, MissingPolicy, Role};
use anyhow::{bail, Context, Result};
use bnbench_core::eval::{arc_comparison, ddm, prediction_report, ArcComparison, PredictionReport};
use bnbench_core::graph::{parse_graph, randomize_orientation};
use bnbench_core::learn::learn;
use bnbench_core::model::{em_fit, forward_sample, mle_fit, parse_bn, predict, DiscreteBn, EmOptions};
use bnbench_core::score::{model_stats, ModelStats};
use bnbench_core::{Dataset, MixedGraph};
use rayon::prelude::*;

/// Row label of the reference graph fitted like any learned one.
pub const KBG: &str = "KBG";

/// One dataset the algorithms are run on.
#[derive(Debug, Clone)]
pub struct TestInput {
    pub label: String,
    pub data: Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetResult {
    pub name: String,
    pub role: Role,
    pub report: Option<PredictionReport>,
    /// Why `report` is absent.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub test: String,
    pub policy: MissingPolicy,
    pub algorithm: String,
    pub stats: Option<ModelStats>,
    pub arcs: Option<ArcComparison>,
    pub ddm: Option<f64>,
    pub targets: Vec<TargetResult>,
    /// Edges in the graph the algorithm returned.
    pub learned_edges: Option<usize>,
    /// Arcs turned around to make the learned graph acyclic.
    pub reversed_arcs: Option<usize>,
    pub error: Option<String>,
}

impl ReportRow {
    fn failed(test: &str, policy: MissingPolicy, algorithm: &str, err: String) -> Self {
        ReportRow {
            test: test.to_string(),
            policy,
            algorithm: algorithm.to_string(),
            stats: None,
            arcs: None,
            ddm: None,
            targets: Vec::new(),
            learned_edges: None,
            reversed_arcs: None,
            error: Some(err),
        }
    }
}

/// Loaded inputs of an experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub tests: Vec<TestInput>,
    pub reference: Option<MixedGraph>,
}

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Reorders `g` so its nodes follow `names`.
pub fn align_graph(g: &MixedGraph, names: &[String]) -> Result<MixedGraph> {
    if g.n() != names.len() {
        bail!("reference graph has {} nodes, data has {}", g.n(), names.len());
    }
    let order = names
        .iter()
        .map(|n| g.index_of(n).with_context(|| format!("reference graph has no node {n:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(g.permuted(&order))
}

/// Loads data files, or samples the ground truth once at the largest size
/// and takes nested prefixes for the smaller ones.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    if let Some(path) = &cfg.ground_truth_bn {
        let bn = parse_bn(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(synthetic_tests(&bn, &cfg.sample_sizes, cfg.seed)?);
    }
    let mut tests = Vec::new();
    for path in &cfg.data {
        let data = Dataset::load_csv(path, &cfg.missing_token).with_context(|| format!("loading {}", path.display()))?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string());
        tests.push(TestInput { label, data });
    }
    let first = &tests[0].data;
    for t in &tests[1..] {
        if t.data.names() != first.names() {
            bail!("{} does not have the same columns as {}", t.label, tests[0].label);
        }
    }
    let reference = match &cfg.reference_graph {
        Some(path) => {
            let g = parse_graph(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            g.require_directed().context("reference graph")?;
            Some(align_graph(&g, &first.names())?)
        }
        None => None,
    };
    Ok(Prepared { tests, reference })
}

pub fn synthetic_tests(bn: &DiscreteBn, sizes: &[usize], seed: u64) -> Result<Prepared> {
    let max = sizes.iter().copied().max().context("no sample sizes")?;
    let full = forward_sample(bn, max, seed)?;
    let tests = sizes.iter().map(|&n| TestInput { label: format!("N={n}"), data: full.prefix(n) }).collect();
    Ok(Prepared { tests, reference: Some(bn.graph().clone()) })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let prepared = prepare(cfg)?;
    run_prepared(&prepared, cfg)
}

enum Job<'a> {
    Learn(&'a AlgorithmRun),
    Reference,
}

/// Structure learner used for the algorithm rows.
pub type Learner = dyn Fn(&AlgorithmRun, &Dataset) -> bnbench_core::Result<MixedGraph> + Sync;

fn default_learner(run: &AlgorithmRun, d: &Dataset) -> bnbench_core::Result<MixedGraph> {
    learn(run.algorithm, &[d], &run.settings)
}

/// Runs every (test, policy, algorithm) cell, then KBG, in parallel. Rows
/// come back in that order; a failing cell becomes a row with its error.
pub fn run_prepared(p: &Prepared, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    run_with(p, cfg, &default_learner)
}

/// [`run_prepared`] with a substitute learner.
pub fn run_with(p: &Prepared, cfg: &ExperimentConfig, learner: &Learner) -> Result<Vec<ReportRow>> {
    let runs = cfg.algorithm_runs()?;
    for t in &p.tests {
        for target in &cfg.targets {
            if t.data.index_of(&target.name).is_none() {
                bail!("target {:?} is not a column of {}", target.name, t.label);
            }
        }
    }
    let mut jobs = Vec::new();
    for t in &p.tests {
        for &policy in &cfg.missing_policy {
            let imputed = (policy == MissingPolicy::ImputeStateMle).then(|| t.data.impute_missing_state());
            let cell = Cell { test: t, policy, imputed, reference: p.reference.as_ref(), cfg, learner };
            jobs.push(cell);
        }
    }
    let mut work: Vec<(&Cell, Job)> = Vec::new();
    for cell in &jobs {
        for run in &runs {
            work.push((cell, Job::Learn(run)));
        }
        if cell.reference.is_some() {
            work.push((cell, Job::Reference));
        }
    }
    Ok(work.par_iter().map(|(cell, job)| cell.run(job)).collect())
}

struct Cell<'a> {
    test: &'a TestInput,
    policy: MissingPolicy,
    imputed: Option<Dataset>,
    reference: Option<&'a MixedGraph>,
    cfg: &'a ExperimentConfig,
    learner: &'a Learner,
}

impl Cell<'_> {
    /// Data the structure is learned from and the model is evaluated on.
    fn data(&self) -> &Dataset {
        self.imputed.as_ref().unwrap_or(&self.test.data)
    }

    fn run(&self, job: &Job) -> ReportRow {
        let name = match job {
            Job::Learn(r) => r.algorithm.name(),
            Job::Reference => KBG,
        };
        match self.try_run(job) {
            Ok(row) => row,
            Err(e) => ReportRow::failed(&self.test.label, self.policy, name, format!("{e:#}")),
        }
    }

    fn try_run(&self, job: &Job) -> Result<ReportRow> {
        let data = self.data();
        let (name, dag, learned_edges, reversed_arcs) = match job {
            Job::Learn(run) => {
                let g = (self.learner)(run, data)?;
                let o = randomize_orientation(&g, self.cfg.seed)?;
                (run.algorithm.name(), o.dag, Some(g.edge_count()), Some(o.reversed))
            }
            Job::Reference => (KBG, self.reference.expect("reference job without graph").clone(), None, None),
        };
        let (bn, stats_data) = match self.policy {
            MissingPolicy::ImputeStateMle => (mle_fit(&dag, data, 0.0)?.bn, data.clone()),
            MissingPolicy::EmMar => {
                let fit = em_fit(&dag, data, EmOptions { seed: self.cfg.seed, ..EmOptions::default() })?;
                (fit.bn, data.complete_rows())
            }
        };
        if stats_data.n_rows() == 0 {
            bail!("no complete rows to compute model statistics on");
        }
        let stats = model_stats(&bn, &stats_data)?;
        let (arcs, ddm_value) = match self.reference {
            Some(r) => {
                let c = arc_comparison(&dag, r)?;
                (Some(c), ddm(&c).ok())
            }
            None => (None, None),
        };
        let targets = self.cfg.targets.iter().map(|t| target_result(&bn, data, &t.name, t.role)).collect();
        Ok(ReportRow {
            test: self.test.label.clone(),
            policy: self.policy,
            algorithm: name.to_string(),
            stats: Some(stats),
            arcs,
            ddm: ddm_value,
            targets,
            learned_edges,
            reversed_arcs,
            error: None,
        })
    }
}

fn target_result(bn: &DiscreteBn, data: &Dataset, name: &str, role: Role) -> TargetResult {
    let attempt = || -> Result<PredictionReport> {
        let idx = bn.index_of(name).with_context(|| format!("model has no variable {name:?}"))?;
        let p = predict(bn, data, idx)?;
        Ok(prediction_report(&p, bn.cpt(idx).arity())?)
    };
    match attempt() {
        Ok(r) => TargetResult { name: name.to_string(), role, report: Some(r), note: None },
        Err(e) => TargetResult { name: name.to_string(), role, report: None, note: Some(format!("{e:#}")) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Target;
    use crate::synth::{gen_ground_truth, GenSpec};

    fn small_cfg(algorithms: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"ground_truth_bn": "unused.bn", "sample_sizes": [300, 600], "seed": 5, "algorithms": {algorithms}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn nested_prefixes() {
        let bn = gen_ground_truth(&GenSpec { nodes: 5, arcs: 4, min_arity: 2, max_arity: 3, seed: 2 }).unwrap();
        let p = synthetic_tests(&bn, &[50, 200], 9).unwrap();
        assert_eq!(p.tests[0].label, "N=50");
        assert_eq!(p.tests[0].data, p.tests[1].data.prefix(50));
    }

    #[test]
    fn rows_in_order_with_kbg_last() {
        let bn = gen_ground_truth(&GenSpec { nodes: 6, arcs: 6, min_arity: 2, max_arity: 3, seed: 1 }).unwrap();
        let mut cfg = small_cfg(r#"["pc", "fges"]"#);
        cfg.targets = vec![Target { name: bn.variables()[0].name.clone(), role: Role::Primary }];
        let p = synthetic_tests(&bn, &cfg.sample_sizes, cfg.seed).unwrap();
        let rows = run_prepared(&p, &cfg).unwrap();
        let names: Vec<(&str, &str)> = rows.iter().map(|r| (r.test.as_str(), r.algorithm.as_str())).collect();
        assert_eq!(names, vec![("N=300", "pc"), ("N=300", "fges"), ("N=300", KBG), ("N=600", "pc"), ("N=600", "fges"), ("N=600", KBG)]);
        for r in &rows {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.stats.is_some());
            assert_eq!(r.targets.len(), 1);
            assert!(r.arcs.is_some());
        }
    }

    #[test]
    fn failures_stay_in_their_row() {
        // FGES refuses incomplete data under EM_MAR; the other rows still run.
        let bn = gen_ground_truth(&GenSpec { nodes: 5, arcs: 4, min_arity: 2, max_arity: 2, seed: 3 }).unwrap();
        let data = forward_sample(&bn, 400, 1).unwrap().mask_mcar(0.1, 2);
        let p = Prepared { tests: vec![TestInput { label: "t".into(), data }], reference: Some(bn.graph().clone()) };
        let mut cfg = small_cfg(r#"["pc", "fges"]"#);
        cfg.missing_policy = vec![MissingPolicy::ImputeStateMle, MissingPolicy::EmMar];
        let rows = run_prepared(&p, &cfg).unwrap();
        assert_eq!(rows.len(), 6);
        let failed: Vec<(MissingPolicy, &str)> = rows.iter().filter(|r| r.error.is_some()).map(|r| (r.policy, r.algorithm.as_str())).collect();
        assert_eq!(failed, vec![(MissingPolicy::EmMar, "fges")]);
    }

    #[test]
    fn kbg_matches_itself() {
        let bn = gen_ground_truth(&GenSpec { nodes: 6, arcs: 7, min_arity: 2, max_arity: 3, seed: 4 }).unwrap();
        let cfg = small_cfg("[]");
        let p = synthetic_tests(&bn, &[200], 1).unwrap();
        let rows = run_prepared(&p, &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let c = rows[0].arcs.unwrap();
        assert_eq!((c.a, c.d, c.r, c.m, c.t), (0, 0, 0, 7, 7));
        assert_eq!(rows[0].ddm, Some(1.0));
    }

    #[test]
    fn unknown_target_is_a_config_error() {
        let bn = gen_ground_truth(&GenSpec { nodes: 3, arcs: 2, min_arity: 2, max_arity: 2, seed: 3 }).unwrap();
        let mut cfg = small_cfg("[]");
        cfg.targets = vec![Target { name: "nope".into(), role: Role::Primary }];
        let p = synthetic_tests(&bn, &[10], 0).unwrap();
        assert!(run_prepared(&p, &cfg).is_err());
    }

    #[test]
    fn reference_alignment() {
        let g = parse_graph("Graph Nodes:\nB;A\n\nGraph Edges:\n1. B --> A\n").unwrap();
        let a = align_graph(&g, &["A".to_string(), "B".to_string()]).unwrap();
        assert_eq!(a.names(), ["A", "B"]);
        assert!(a.is_directed(1, 0));
        assert!(align_graph(&g, &["A".to_string(), "C".to_string()]).is_err());
    }
}
