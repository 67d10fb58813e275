use bnbench_cli::config::AlgorithmRun;
use bnbench_cli::experiment::{prepare, run_prepared, run_with, KBG};
use bnbench_cli::report::{render, Table};
use bnbench_cli::synth::{gen_ground_truth, GenSpec};
use bnbench_cli::ExperimentConfig;
use bnbench_core::graph::write_graph;
use bnbench_core::learn::{learn, Algorithm};
use bnbench_core::model::{forward_sample, write_bn};
use bnbench_core::{Dataset, Error, MixedGraph};
use std::path::Path;
use std::process::Command;

fn bnbench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bnbench")).args(args).output().expect("running bnbench")
}

fn synthetic_dir(dir: &Path) {
    let bn = gen_ground_truth(&GenSpec { nodes: 7, arcs: 8, min_arity: 2, max_arity: 3, seed: 12 }).unwrap();
    std::fs::write(dir.join("truth.bn"), write_bn(&bn)).unwrap();
    std::fs::write(
        dir.join("config.json"),
        r#"{
            "ground_truth_bn": "truth.bn",
            "sample_sizes": [300, 1000],
            "algorithms": ["PC", "CPC-Stable", {"name": "FGES", "sample_prior": 2.0}, "FCI", "GFCI"],
            "targets": [{"name": "V0"}, {"name": "V3", "role": "SECONDARY"}],
            "seed": 1
        }"#,
    )
    .unwrap();
}

fn read_outputs(dir: &Path) -> Vec<String> {
    ["report.csv", "report.md", "ranks.md"].iter().map(|f| std::fs::read_to_string(dir.join(f)).unwrap()).collect()
}

#[test]
fn config_file_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_dir(dir.path());
    let cfg = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(cfg.ground_truth_bn.as_deref(), Some(dir.path().join("truth.bn").as_path()));
    assert_eq!(cfg.algorithm_runs().unwrap().len(), 5);
    assert_eq!(cfg.algorithm_runs().unwrap()[2].settings.fges.score.sample_prior, 2.0);
    let p = prepare(&cfg).unwrap();
    assert_eq!(p.tests.iter().map(|t| t.label.as_str()).collect::<Vec<_>>(), ["N=300", "N=1000"]);
}

#[test]
fn bench_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_dir(dir.path());
    let config = dir.path().join("config.json");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = bnbench(&["bench", "--config", config.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(read_outputs(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    let table = Table::from_csv(&outputs[0][0]).unwrap();
    assert_eq!(table.rows.len(), 2 * 6);
    assert_eq!(Table::from_csv(&table.to_csv().unwrap()).unwrap(), table);
}

#[test]
fn kbg_row_matches_the_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_dir(dir.path());
    let cfg = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    let p = prepare(&cfg).unwrap();
    let rows = run_prepared(&p, &cfg).unwrap();
    let kbg: Vec<_> = rows.iter().filter(|r| r.algorithm == KBG).collect();
    assert_eq!(kbg.len(), 2);
    for r in kbg {
        let c = r.arcs.unwrap();
        assert_eq!((c.a, c.d, c.r, c.m), (0, 0, 0, c.t));
        assert_eq!(r.ddm, Some(1.0));
    }
}

#[test]
fn a_failing_learner_only_spoils_its_own_rows() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_dir(dir.path());
    let cfg = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    let p = prepare(&cfg).unwrap();
    let normal = run_prepared(&p, &cfg).unwrap();
    let stub = |run: &AlgorithmRun, d: &Dataset| -> bnbench_core::Result<MixedGraph> {
        if run.algorithm == Algorithm::Fges {
            return Err(Error::Invalid("stub failure".into()));
        }
        learn(run.algorithm, &[d], &run.settings)
    };
    let broken = run_with(&p, &cfg, &stub).unwrap();
    assert_eq!(normal.len(), broken.len());
    for (a, b) in normal.iter().zip(&broken) {
        if a.algorithm == "fges" {
            assert!(b.error.as_deref().unwrap().contains("stub failure"));
            assert!(b.stats.is_none());
        } else {
            assert_eq!(a, b);
        }
    }
    let rendered = render(&broken, 3).unwrap();
    assert_eq!(rendered.errors, 2);
    assert!(rendered.markdown.contains("stub failure"));
}

#[test]
fn failed_rows_give_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bn = gen_ground_truth(&GenSpec { nodes: 5, arcs: 4, min_arity: 2, max_arity: 3, seed: 4 }).unwrap();
    let data = forward_sample(&bn, 400, 2).unwrap().mask_mcar(0.05, 3);
    let csv = dir.path().join("site.csv");
    std::fs::write(&csv, data.to_csv_string("NA")).unwrap();
    std::fs::write(dir.path().join("kbg.txt"), write_graph(bn.graph())).unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        r#"{
            "data": ["site.csv"],
            "missing_token": "NA",
            "reference_graph": "kbg.txt",
            "algorithms": ["PC-Stable", "FGES"],
            "missing_policy": ["IMPUTE_STATE_MLE", "EM_MAR"],
            "targets": [{"name": "V1"}],
            "seed": 3
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bnbench(&[
        "bench",
        "--config",
        dir.path().join("config.json").to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let table = Table::from_csv(&std::fs::read_to_string(out.join("report.csv")).unwrap()).unwrap();
    let err = table.col("error").unwrap();
    let failed: Vec<(&str, &str)> = table
        .rows
        .iter()
        .filter(|r| !r[err].is_empty())
        .map(|r| (r[1].as_str(), r[2].as_str()))
        .collect();
    assert_eq!(failed, [("EM_MAR", "fges")]);
}

#[test]
fn bad_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{"ground_truth_bn": "x.bn", "sample_sizes": [10], "seed": 1, "alpah": 0.1}"#).unwrap();
    let o = bnbench(&["bench", "--config", path.to_str().unwrap(), "--seed", "1", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpah"));
}
