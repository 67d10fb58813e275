//! Discrete Bayesian-network structure learning and evaluation.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: mixed graphs (DAG, CPDAG, PAG), Meek rules, DAG extensions.
//! * [`data`]: discrete datasets, CSV ingestion, missing-value policies.
//! * [`indtest`]: G² / Pearson conditional independence tests and a d-separation oracle.
//! * [`score`]: BDeu and BIC local scores plus whole-model fit statistics.
//! * [`learn`]: FAS, the PC family, FGES, IMaGES, FCI, RFCI, CFCI and GFCI.
//! * [`model`]: CPT fitting (MLE, EM), exact inference, prediction, sampling.
//! * [`eval`]: arc comparison, DDM, SHD, one-vs-rest AUC, CC, rank summaries.

pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod indtest;
pub mod learn;
pub mod model;
pub mod score;

pub use data::{Dataset, Variable, MISSING};
pub use error::{Error, Result};
pub use graph::{Edge, Mark, MixedGraph, NodeId};
pub use model::{Cpt, DiscreteBn};
