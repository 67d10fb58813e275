//! Structure learning: constraint-based (FAS, PC family, FCI family),
//! score-based (FGES, IMaGES) and hybrid (GFCI).

mod fci;
mod fges;
mod pag;
mod pc;

pub use fci::{fci, fci_with_test, gfci, gfci_with, FciOutput};
pub use fges::{fges, fges_with_score, images_bdeu, FgesOutput};
pub use pc::{fas, fas_with_test, pc, pc_with_test, PcOutput};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::indtest::TestKind;
use crate::score::{LocalScoreParams, ScoreKind};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColliderRule {
    /// `x → y ← z` iff `y` is not in the recorded sepset of `x, z`.
    #[default]
    Sepset,
    /// Vote over every separating subset of the neighbourhoods.
    Conservative,
    /// Use the candidate separating set with the largest p-value.
    MaxP,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcParams {
    pub alpha: f64,
    /// Largest conditioning set; `-1` for no limit.
    pub depth: i32,
    pub stable: bool,
    pub collider_rule: ColliderRule,
    /// Bound the MAXP search by `maxp_depth` instead of `depth`.
    pub maxp_heuristic: bool,
    pub maxp_depth: i32,
    pub test: TestKind,
}

impl Default for PcParams {
    fn default() -> Self {
        PcParams {
            alpha: 0.01,
            depth: -1,
            stable: false,
            collider_rule: ColliderRule::Sepset,
            maxp_heuristic: true,
            maxp_depth: 3,
            test: TestKind::G2,
        }
    }
}

impl PcParams {
    pub fn pc() -> Self {
        Self::default()
    }

    pub fn cpc() -> Self {
        PcParams { collider_rule: ColliderRule::Conservative, ..Self::default() }
    }

    pub fn pc_stable() -> Self {
        PcParams { stable: true, ..Self::default() }
    }

    pub fn cpc_stable() -> Self {
        PcParams { stable: true, collider_rule: ColliderRule::Conservative, ..Self::default() }
    }

    pub fn pc_max() -> Self {
        PcParams { collider_rule: ColliderRule::MaxP, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha_depth(self.alpha, self.depth)?;
        if self.maxp_depth < -1 {
            return Err(Error::Invalid(format!("maxp_depth {}", self.maxp_depth)));
        }
        Ok(())
    }
}

fn validate_alpha_depth(alpha: f64, depth: i32) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if depth < -1 {
        return Err(Error::Invalid(format!("depth must be ≥ -1, got {depth}")));
    }
    Ok(())
}

/// `-1` means unlimited.
pub(crate) fn depth_limit(depth: i32) -> usize {
    if depth < 0 {
        usize::MAX
    } else {
        depth as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FciParams {
    pub alpha: f64,
    pub depth: i32,
    /// Longest discriminating path (in nodes); `-1` for no limit.
    pub max_discriminating_path: i32,
    /// Apply Zhang's rules R5–R10 as well as R1–R4.
    pub complete_rule_set: bool,
    /// Conservative collider voting (CFCI).
    pub conservative: bool,
    /// Largest conditioning set tried in the possible-d-sep stage.
    pub possible_dsep_depth: usize,
    pub test: TestKind,
}

impl Default for FciParams {
    fn default() -> Self {
        FciParams {
            alpha: 0.01,
            depth: -1,
            max_discriminating_path: -1,
            complete_rule_set: false,
            conservative: false,
            possible_dsep_depth: 3,
            test: TestKind::G2,
        }
    }
}

impl FciParams {
    pub fn validate(&self) -> Result<()> {
        validate_alpha_depth(self.alpha, self.depth)?;
        if self.max_discriminating_path < -1 {
            return Err(Error::Invalid(format!("max_discriminating_path {}", self.max_discriminating_path)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgesParams {
    pub score: LocalScoreParams,
    pub score_kind: ScoreKind,
    /// Never insert an edge whose single-edge score gain is not positive.
    pub faithfulness_speedup: bool,
    /// Largest degree an insertion may create.
    pub max_degree: usize,
}

impl Default for FgesParams {
    fn default() -> Self {
        FgesParams { score: LocalScoreParams::default(), score_kind: ScoreKind::Bdeu, faithfulness_speedup: false, max_degree: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Pc,
    Cpc,
    PcStable,
    CpcStable,
    PcMax,
    Fas,
    Fges,
    ImagesBdeu,
    Fci,
    Rfci,
    Cfci,
    Gfci,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Algorithm::Pc,
        Algorithm::Cpc,
        Algorithm::PcStable,
        Algorithm::CpcStable,
        Algorithm::PcMax,
        Algorithm::Fas,
        Algorithm::Fges,
        Algorithm::ImagesBdeu,
        Algorithm::Fci,
        Algorithm::Rfci,
        Algorithm::Cfci,
        Algorithm::Gfci,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pc => "pc",
            Algorithm::Cpc => "cpc",
            Algorithm::PcStable => "pc-stable",
            Algorithm::CpcStable => "cpc-stable",
            Algorithm::PcMax => "pc-max",
            Algorithm::Fas => "fas",
            Algorithm::Fges => "fges",
            Algorithm::ImagesBdeu => "images-bdeu",
            Algorithm::Fci => "fci",
            Algorithm::Rfci => "rfci",
            Algorithm::Cfci => "cfci",
            Algorithm::Gfci => "gfci",
        }
    }

    /// Member of the PC family (PC, CPC, PC-Stable, CPC-Stable, PC-Max).
    pub fn is_pc_family(self) -> bool {
        matches!(self, Algorithm::Pc | Algorithm::Cpc | Algorithm::PcStable | Algorithm::CpcStable | Algorithm::PcMax)
    }

    pub fn is_score_based(self) -> bool {
        matches!(self, Algorithm::Fges | Algorithm::ImagesBdeu | Algorithm::Gfci)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm {s:?}")))
    }
}

/// Parameters shared by every algorithm in a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnSettings {
    pub alpha: f64,
    pub depth: i32,
    pub test: TestKind,
    pub fges: FgesParams,
    pub maxp_heuristic: bool,
    pub maxp_depth: i32,
    pub max_discriminating_path: i32,
    pub complete_rule_set: bool,
    pub possible_dsep_depth: usize,
}

impl Default for LearnSettings {
    fn default() -> Self {
        let pc = PcParams::default();
        let fci = FciParams::default();
        LearnSettings {
            alpha: pc.alpha,
            depth: pc.depth,
            test: pc.test,
            fges: FgesParams::default(),
            maxp_heuristic: pc.maxp_heuristic,
            maxp_depth: pc.maxp_depth,
            max_discriminating_path: fci.max_discriminating_path,
            complete_rule_set: fci.complete_rule_set,
            possible_dsep_depth: fci.possible_dsep_depth,
        }
    }
}

impl LearnSettings {
    pub fn pc_params(&self, alg: Algorithm) -> PcParams {
        let base = match alg {
            Algorithm::Cpc => PcParams::cpc(),
            Algorithm::PcStable => PcParams::pc_stable(),
            Algorithm::CpcStable => PcParams::cpc_stable(),
            Algorithm::PcMax => PcParams::pc_max(),
            _ => PcParams::pc(),
        };
        PcParams {
            alpha: self.alpha,
            depth: self.depth,
            test: self.test,
            maxp_heuristic: self.maxp_heuristic,
            maxp_depth: self.maxp_depth,
            ..base
        }
    }

    pub fn fci_params(&self, alg: Algorithm) -> FciParams {
        FciParams {
            alpha: self.alpha,
            depth: self.depth,
            max_discriminating_path: self.max_discriminating_path,
            complete_rule_set: self.complete_rule_set,
            conservative: alg == Algorithm::Cfci,
            possible_dsep_depth: self.possible_dsep_depth,
            test: self.test,
        }
    }
}

/// Runs one named algorithm. Only IMaGES uses more than the first dataset.
pub fn learn(alg: Algorithm, datasets: &[&Dataset], s: &LearnSettings) -> Result<MixedGraph> {
    let d = *datasets.first().ok_or_else(|| Error::Empty("dataset list".into()))?;
    Ok(match alg {
        Algorithm::Pc | Algorithm::Cpc | Algorithm::PcStable | Algorithm::CpcStable | Algorithm::PcMax => {
            pc(d, &s.pc_params(alg))?.graph
        }
        Algorithm::Fas => fas(d, &s.pc_params(alg))?.0,
        Algorithm::Fges => fges(d, &s.fges)?.graph,
        Algorithm::ImagesBdeu => images_bdeu(datasets, &s.fges)?.graph,
        Algorithm::Fci | Algorithm::Cfci => fci(d, &s.fci_params(alg), false)?.graph,
        Algorithm::Rfci => fci(d, &s.fci_params(alg), true)?.graph,
        Algorithm::Gfci => gfci(d, &s.fges, &s.fci_params(alg))?.graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("IMaGES_BDeu".parse::<Algorithm>().unwrap(), Algorithm::ImagesBdeu);
        assert!("ccd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(PcParams::cpc_stable().collider_rule, ColliderRule::Conservative);
        assert!(PcParams::cpc_stable().stable);
        assert_eq!(PcParams::pc().alpha, 0.01);
        assert_eq!(PcParams::pc().depth, -1);
        assert_eq!(PcParams::pc_max().maxp_depth, 3);
        assert!(PcParams { alpha: 1.0, ..PcParams::pc() }.validate().is_err());
        assert!(PcParams { depth: -2, ..PcParams::pc() }.validate().is_err());
        assert_eq!(FgesParams::default().max_degree, 100);
        assert!(!FgesParams::default().faithfulness_speedup);
    }
}
