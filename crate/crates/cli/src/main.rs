use anyhow::{bail, Context, Result};
use bnbench_cli::config::{AlgorithmEntry, ExperimentConfig, MissingPolicy, Overrides, Role, Target};
use bnbench_cli::experiment::run_experiment;
use bnbench_cli::report::{fmt_ddm, fmt_real, rank_report, render, Table};
use bnbench_cli::synth::{gen_ground_truth, GenSpec};
use bnbench_core::eval::{arc_comparison, ddm, prediction_report, roc_points, shd};
use bnbench_core::graph::{parse_graph, randomize_orientation, write_graph};
use bnbench_core::learn::{learn, Algorithm, LearnSettings};
use bnbench_core::model::{em_fit, forward_sample, mle_fit, parse_bn, predict, write_bn, EmOptions};
use bnbench_core::score::model_stats;
use bnbench_core::{Dataset, MixedGraph};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bnbench", version, about = "Discrete Bayesian-network structure learning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Cell value read as missing.
    #[arg(long, default_value = "")]
    missing_token: String,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        Dataset::load_csv(&self.data, &self.missing_token).with_context(|| format!("loading {}", self.data.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn a graph with one algorithm.
    Learn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        depth: Option<i32>,
        /// G2 or CHI2.
        #[arg(long)]
        test: Option<String>,
        /// Add a MISSING state to incomplete columns before learning.
        #[arg(long)]
        impute: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit CPTs for a graph (MLE, or EM with --em). Graphs that are not
    /// DAGs are oriented first.
    Fit {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        em: bool,
        #[arg(long, default_value_t = 0.0)]
        pseudocount: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior of one target for every row, scored by AUC and CC.
    Predict {
        #[arg(long)]
        bn: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        target: String,
        /// Write one-vs-rest ROC points per state to this CSV.
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Forward-sample a BN to CSV.
    Sample {
        #[arg(long)]
        bn: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Blank out this fraction of cells completely at random.
        #[arg(long)]
        mcar: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Arc statistics, DDM and SHD of a learned graph against a reference.
    Compare {
        #[arg(long)]
        learned: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Seed for orienting a learned graph that is not a DAG.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Chi², Df, p and BIC of a BN on data.
    Stats {
        #[arg(long)]
        bn: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Random ground-truth BN.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 27)]
        nodes: usize,
        #[arg(long, default_value_t = 31)]
        arcs: usize,
        #[arg(long, default_value_t = 2)]
        min_arity: usize,
        #[arg(long, default_value_t = 7)]
        max_arity: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full benchmark from a JSON config; writes report.csv, report.md and
    /// ranks.md.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        data: Vec<PathBuf>,
        #[arg(long)]
        reference_graph: Option<PathBuf>,
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        sample_sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        policy: Vec<MissingPolicy>,
        #[arg(long, value_delimiter = ',')]
        targets: Vec<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Worker threads (all cores by default).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Top-k frequencies from one or more report CSVs.
    Ranks {
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_graph(path: &Path) -> Result<MixedGraph> {
    parse_graph(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn as_dag(g: MixedGraph, seed: u64) -> Result<MixedGraph> {
    if g.is_directed_only() {
        return Ok(g);
    }
    let o = randomize_orientation(&g, seed)?;
    if o.reversed > 0 {
        eprintln!("note: {} arcs reversed to break directed cycles", o.reversed);
    }
    Ok(o.dag)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Learn { data, algorithm, alpha, depth, test, impute, out } => {
            let mut d = data.load()?;
            if impute {
                d = d.impute_missing_state();
            }
            let mut s = LearnSettings::default();
            Overrides { alpha, depth, test, ..Overrides::default() }.apply(&mut s)?;
            let g = learn(algorithm, &[&d], &s)?;
            emit(out.as_deref(), &write_graph(&g))?;
        }
        Command::Fit { graph, data, em, pseudocount, seed, out } => {
            let d = data.load()?;
            let g = as_dag(read_graph(&graph)?, seed)?;
            let bn = if em {
                let fit = em_fit(&g, &d, EmOptions { seed, ..EmOptions::default() })?;
                eprintln!("EM: {} iterations, converged: {}", fit.iterations, fit.converged);
                fit.bn
            } else {
                mle_fit(&g, &d, pseudocount)?.bn
            };
            emit(out.as_deref(), &write_bn(&bn))?;
        }
        Command::Predict { bn, data, target, roc } => {
            let bn = parse_bn(&read(&bn)?)?;
            let d = data.load()?;
            let t = bn.index_of(&target).with_context(|| format!("model has no variable {target:?}"))?;
            let p = predict(&bn, &d, t)?;
            let arity = bn.cpt(t).arity();
            let rep = prediction_report(&p, arity)?;
            let states = &bn.variables()[t].states;
            for (s, auc) in states.iter().zip(&rep.per_state_auc) {
                println!("AUC {target}={s}: {}", auc.map(fmt_real).unwrap_or_else(|| "undefined".into()));
            }
            println!("AUC summary: {}", rep.summary_auc.map(fmt_real).unwrap_or_else(|| "undefined".into()));
            println!("CC: {}% ({} scored, {} excluded)", fmt_real(rep.cc), rep.scored_rows, rep.excluded_rows);
            if let Some(path) = roc {
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["state", "fpr", "tpr"])?;
                let scored: Vec<(&[f64], u8)> = p.scored().collect();
                for (k, s) in states.iter().enumerate() {
                    let scores: Vec<f64> = scored.iter().map(|(q, _)| q[k]).collect();
                    let pos: Vec<bool> = scored.iter().map(|&(_, l)| l as usize == k).collect();
                    for (fpr, tpr) in roc_points(&scores, &pos) {
                        w.write_record([s.clone(), fpr.to_string(), tpr.to_string()])?;
                    }
                }
                w.flush()?;
            }
        }
        Command::Sample { bn, n, seed, mcar, out } => {
            let bn = parse_bn(&read(&bn)?)?;
            let mut d = forward_sample(&bn, n, seed)?;
            if let Some(rate) = mcar {
                if !(0.0..=1.0).contains(&rate) {
                    bail!("--mcar must be in [0, 1]");
                }
                d = d.mask_mcar(rate, seed);
            }
            emit(out.as_deref(), &d.to_csv_string(""))?;
        }
        Command::Compare { learned, reference, seed } => {
            let reference = read_graph(&reference)?;
            let learned = bnbench_cli::experiment::align_graph(&read_graph(&learned)?, reference.names())?;
            let dag = as_dag(learned, seed)?;
            let c = arc_comparison(&dag, &reference)?;
            println!("a {} d {} r {} m {} t {}", c.a, c.d, c.r, c.m, c.t);
            println!("DDM {}", ddm(&c).map(fmt_ddm).unwrap_or_else(|e| e.to_string()));
            println!("SHD {}", shd(&dag, &reference)?);
        }
        Command::Stats { bn, data } => {
            let bn = parse_bn(&read(&bn)?)?;
            let mut d = data.load()?;
            if d.has_missing() {
                let before = d.n_rows();
                d = d.complete_rows();
                eprintln!("note: using the {} complete rows of {before}", d.n_rows());
            }
            let s = model_stats(&bn, &d)?;
            println!("Chi2 {}\nDf {}\np {}\nBIC {}", fmt_real(s.chi2), s.df, fmt_real(s.p_value), fmt_real(s.bic));
            if s.skipped_cells > 0 {
                eprintln!("note: {} observed cells have zero model probability and were skipped", s.skipped_cells);
            }
        }
        Command::Gen { seed, nodes, arcs, min_arity, max_arity, out } => {
            let bn = gen_ground_truth(&GenSpec { nodes, arcs, min_arity, max_arity, seed })?;
            emit(out.as_deref(), &write_bn(&bn))?;
        }
        Command::Bench { config, seed, out, data, reference_graph, ground_truth, sample_sizes, algorithms, policy, targets, alpha, threads, top } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::new(seed),
            };
            cfg.seed = seed;
            if !targets.is_empty() {
                cfg.targets = targets.into_iter().map(|name| Target { name, role: Role::Primary }).collect();
            }
            if !data.is_empty() {
                cfg.data = data;
            }
            if reference_graph.is_some() {
                cfg.reference_graph = reference_graph;
            }
            if ground_truth.is_some() {
                cfg.ground_truth_bn = ground_truth;
            }
            if !sample_sizes.is_empty() {
                cfg.sample_sizes = sample_sizes;
            }
            if !algorithms.is_empty() {
                cfg.algorithms = algorithms.into_iter().map(AlgorithmEntry::Name).collect();
            }
            if !policy.is_empty() {
                cfg.missing_policy = policy;
            }
            if alpha.is_some() {
                cfg.settings.alpha = alpha;
            }
            cfg.validate()?;
            let rows = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| run_experiment(&cfg))?,
                None => run_experiment(&cfg)?,
            };
            let rendered = render(&rows, top)?;
            rendered.write_to(&out)?;
            if rendered.errors > 0 {
                eprintln!("{} of {} rows failed; see the error column", rendered.errors, rows.len());
                return Ok(ExitCode::from(2));
            }
        }
        Command::Ranks { reports, top } => {
            if reports.is_empty() {
                bail!("no report files given");
            }
            let tables = reports.iter().map(|p| Table::from_csv(&read(p)?)).collect::<Result<Vec<_>>>()?;
            print!("{}", rank_report(&tables, top).to_markdown());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn seed_is_required_where_it_matters() {
        assert!(Cli::try_parse_from(["bnbench", "gen"]).is_err());
        assert!(Cli::try_parse_from(["bnbench", "sample", "--bn", "x", "-n", "5"]).is_err());
        assert!(Cli::try_parse_from(["bnbench", "bench", "--out", "o"]).is_err());
        assert!(Cli::try_parse_from(["bnbench", "gen", "--seed", "1"]).is_ok());
    }

}
