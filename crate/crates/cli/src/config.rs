//! Experiment configuration, read from a single JSON document.

use anyhow::{bail, Context, Result};
use bnbench_core::indtest::TestKind;
use bnbench_core::learn::{Algorithm, LearnSettings};
use bnbench_core::score::ScoreKind;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MissingPolicy {
    /// Missing cells become an extra state; structure and CPTs come from
    /// the completed data.
    #[serde(rename = "IMPUTE_STATE_MLE")]
    ImputeStateMle,
    /// Structure from the raw data (listwise deletion inside tests), CPTs
    /// by EM.
    #[serde(rename = "EM_MAR")]
    EmMar,
}

impl MissingPolicy {
    pub fn label(self) -> &'static str {
        match self {
            MissingPolicy::ImputeStateMle => "IMPUTE_STATE_MLE",
            MissingPolicy::EmMar => "EM_MAR",
        }
    }
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for MissingPolicy {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "IMPUTE_STATE_MLE" | "IMPUTE" => Ok(MissingPolicy::ImputeStateMle),
            "EM_MAR" | "EM" => Ok(MissingPolicy::EmMar),
            _ => bail!("unknown missing policy {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    #[default]
    Primary,
    Secondary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub name: String,
    #[serde(default)]
    pub role: Role,
}

/// Parameter overrides. Unset fields keep the value from the enclosing
/// level (config-wide settings, then the built-in defaults).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<i32>,
    /// `G2` or `CHI2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxp_heuristic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxp_depth: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_discriminating_path: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete_rule_set: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub possible_dsep_depth: Option<usize>,
    /// `BDEU` or `BIC`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_discount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faithfulness_speedup: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
}

pub fn parse_test_kind(s: &str) -> Result<TestKind> {
    match s.trim().to_ascii_uppercase().as_str() {
        "G2" | "G-SQUARE" | "G_SQUARE" => Ok(TestKind::G2),
        "CHI2" | "CHI-SQUARE" | "CHI_SQUARE" => Ok(TestKind::Chi2),
        _ => bail!("unknown test {s:?}"),
    }
}

pub fn parse_score_kind(s: &str) -> Result<ScoreKind> {
    match s.trim().to_ascii_uppercase().as_str() {
        "BDEU" => Ok(ScoreKind::Bdeu),
        "BIC" => Ok(ScoreKind::Bic),
        _ => bail!("unknown score {s:?}"),
    }
}

impl Overrides {
    pub fn apply(&self, s: &mut LearnSettings) -> Result<()> {
        macro_rules! set {
            ($field:ident => $($dst:ident).+) => {
                if let Some(v) = self.$field {
                    s.$($dst).+ = v;
                }
            };
        }
        set!(alpha => alpha);
        set!(depth => depth);
        set!(maxp_heuristic => maxp_heuristic);
        set!(maxp_depth => maxp_depth);
        set!(max_discriminating_path => max_discriminating_path);
        set!(complete_rule_set => complete_rule_set);
        set!(possible_dsep_depth => possible_dsep_depth);
        set!(sample_prior => fges.score.sample_prior);
        set!(structure_prior => fges.score.structure_prior);
        set!(penalty_discount => fges.score.penalty_discount);
        set!(faithfulness_speedup => fges.faithfulness_speedup);
        set!(max_degree => fges.max_degree);
        if let Some(t) = &self.test {
            s.test = parse_test_kind(t)?;
        }
        if let Some(k) = &self.score {
            s.fges.score_kind = parse_score_kind(k)?;
        }
        Ok(())
    }
}

/// An algorithm entry: a bare name or `{"name": ..., <overrides>}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Name(String),
    Detailed {
        name: String,
        #[serde(flatten)]
        overrides: Overrides,
    },
}

impl<'de> Deserialize<'de> for AlgorithmEntry {
    // by hand: a flattened struct would swallow misspelled override keys
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(de)? {
            serde_json::Value::String(name) => Ok(AlgorithmEntry::Name(name)),
            serde_json::Value::Object(mut map) => {
                let name = match map.remove("name") {
                    Some(serde_json::Value::String(n)) => n,
                    _ => return Err(D::Error::custom("algorithm entry needs a string \"name\"")),
                };
                let overrides = serde_json::from_value(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
                Ok(AlgorithmEntry::Detailed { name, overrides })
            }
            other => Err(D::Error::custom(format!("expected an algorithm name or object, found {other}"))),
        }
    }
}

impl AlgorithmEntry {
    pub fn name(&self) -> &str {
        match self {
            AlgorithmEntry::Name(n) | AlgorithmEntry::Detailed { name: n, .. } => n,
        }
    }

    pub fn overrides(&self) -> Overrides {
        match self {
            AlgorithmEntry::Name(_) => Overrides::default(),
            AlgorithmEntry::Detailed { overrides, .. } => overrides.clone(),
        }
    }
}

fn default_policies() -> Vec<MissingPolicy> {
    vec![MissingPolicy::ImputeStateMle]
}

fn default_algorithms() -> Vec<AlgorithmEntry> {
    Algorithm::ALL.iter().map(|a| AlgorithmEntry::Name(a.name().to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV files, one test each (real mode).
    #[serde(default)]
    pub data: Vec<PathBuf>,
    #[serde(default)]
    pub missing_token: String,
    /// Knowledge-based graph to compare against (real mode).
    #[serde(default)]
    pub reference_graph: Option<PathBuf>,
    /// Ground-truth BN to sample from (synthetic mode).
    #[serde(default)]
    pub ground_truth_bn: Option<PathBuf>,
    /// Synthetic sample sizes; each is a prefix of one seeded sample.
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    /// Every algorithm when absent; an empty list leaves only KBG.
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmEntry>,
    /// Applied to every algorithm before its own overrides.
    #[serde(default)]
    pub settings: Overrides,
    #[serde(default = "default_policies")]
    pub missing_policy: Vec<MissingPolicy>,
    #[serde(default)]
    pub targets: Vec<Target>,
    pub seed: u64,
}

/// Resolved algorithm list entry.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub settings: LearnSettings,
}

impl ExperimentConfig {
    /// No inputs yet; every algorithm, the imputation policy, no targets.
    pub fn new(seed: u64) -> Self {
        ExperimentConfig {
            data: Vec::new(),
            missing_token: String::new(),
            reference_graph: None,
            ground_truth_bn: None,
            sample_sizes: Vec::new(),
            algorithms: default_algorithms(),
            settings: Overrides::default(),
            missing_policy: default_policies(),
            targets: Vec::new(),
            seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.data.iter_mut().for_each(fix);
        self.reference_graph.as_mut().map(fix);
        self.ground_truth_bn.as_mut().map(fix);
    }

    pub fn is_synthetic(&self) -> bool {
        self.ground_truth_bn.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        match (self.is_synthetic(), self.data.is_empty()) {
            (true, false) => bail!("give either data files or a ground-truth BN, not both"),
            (false, true) => bail!("no data files and no ground-truth BN"),
            (true, true) if self.sample_sizes.is_empty() => bail!("synthetic mode needs sample_sizes"),
            _ => {}
        }
        if self.is_synthetic() && self.reference_graph.is_some() {
            bail!("synthetic mode compares against the ground truth; drop reference_graph");
        }
        if self.sample_sizes.contains(&0) {
            bail!("sample sizes must be positive");
        }
        if self.missing_policy.is_empty() {
            bail!("missing_policy is empty");
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.missing_policy {
            if !seen.insert(p) {
                bail!("missing policy {p} listed twice");
            }
        }
        let mut names = std::collections::HashSet::new();
        for t in &self.targets {
            if !names.insert(&t.name) {
                bail!("target {:?} listed twice", t.name);
            }
        }
        self.algorithm_runs()?;
        Ok(())
    }

    pub fn algorithm_runs(&self) -> Result<Vec<AlgorithmRun>> {
        let mut base = LearnSettings::default();
        self.settings.apply(&mut base).context("settings")?;
        let mut out: Vec<AlgorithmRun> = Vec::new();
        for entry in &self.algorithms {
            let algorithm: Algorithm = entry.name().parse()?;
            if out.iter().any(|r| r.algorithm == algorithm) {
                bail!("algorithm {algorithm} listed twice");
            }
            let mut settings = base;
            entry.overrides().apply(&mut settings).with_context(|| format!("overrides for {algorithm}"))?;
            out.push(AlgorithmRun { algorithm, settings });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_real_config() {
        let cfg = ExperimentConfig::from_json(r#"{"data": ["a.csv"], "seed": 3}"#).unwrap();
        assert_eq!(cfg.algorithms.len(), 12);
        assert_eq!(cfg.missing_policy, vec![MissingPolicy::ImputeStateMle]);
        assert!(!cfg.is_synthetic());
    }

    #[test]
    fn overrides_layer() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "data": ["a.csv"],
                "seed": 1,
                "settings": {"alpha": 0.05},
                "algorithms": ["pc", {"name": "FGES", "sample_prior": 10, "score": "bic"}, {"name": "cpc", "alpha": 0.2, "test": "chi2"}],
                "missing_policy": ["EM_MAR", "IMPUTE_STATE_MLE"],
                "targets": [{"name": "Y"}, {"name": "Z", "role": "SECONDARY"}]
            }"#,
        )
        .unwrap();
        let runs = cfg.algorithm_runs().unwrap();
        assert_eq!(runs[0].settings.alpha, 0.05);
        assert_eq!(runs[1].algorithm, Algorithm::Fges);
        assert_eq!(runs[1].settings.fges.score.sample_prior, 10.0);
        assert_eq!(runs[1].settings.fges.score_kind, ScoreKind::Bic);
        assert_eq!(runs[2].settings.alpha, 0.2);
        assert_eq!(runs[2].settings.test, TestKind::Chi2);
        assert_eq!(cfg.targets[1].role, Role::Secondary);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"seed": 1}"#,
            r#"{"data": ["a.csv"], "ground_truth_bn": "g.bn", "seed": 1}"#,
            r#"{"ground_truth_bn": "g.bn", "seed": 1}"#,
            r#"{"data": ["a.csv"], "seed": 1, "algorithms": ["ccd"]}"#,
            r#"{"data": ["a.csv"], "seed": 1, "algorithms": ["pc", "PC"]}"#,
            r#"{"data": ["a.csv"], "seed": 1, "missing_policy": []}"#,
            r#"{"data": ["a.csv"], "seed": 1, "settings": {"test": "fisher"}}"#,
            r#"{"data": ["a.csv"], "seed": 1, "alpha": 0.1}"#,
            r#"{"data": ["a.csv"]}"#,
            r#"{"data": ["a.csv"], "seed": 1, "algorithms": [{"name": "pc", "alpah": 0.1}]}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_algorithm_list_is_allowed() {
        let cfg = ExperimentConfig::from_json(r#"{"ground_truth_bn": "g.bn", "sample_sizes": [10], "algorithms": [], "seed": 0}"#).unwrap();
        assert!(cfg.algorithm_runs().unwrap().is_empty());
    }

    #[test]
    fn paths_are_rebased() {
        let mut cfg = ExperimentConfig::from_json(r#"{"data": ["a.csv", "/abs/b.csv"], "reference_graph": "k.txt", "seed": 0}"#).unwrap();
        cfg.rebase(Path::new("/cfg"));
        assert_eq!(cfg.data, vec![PathBuf::from("/cfg/a.csv"), PathBuf::from("/abs/b.csv")]);
        assert_eq!(cfg.reference_graph, Some(PathBuf::from("/cfg/k.txt")));
    }
}
