//! Parameterised discrete Bayesian networks.

mod fit;
mod infer;
mod io;
mod sample;

pub use fit::{em_fit, loglik, mle_fit, EmFit, EmOptions, LogLik, MleFit};
pub use infer::{eliminate, eliminate_with_order, posterior, predict, Factor, Prediction};
pub use io::{parse_bn, write_bn};
pub use sample::forward_sample;

use crate::data::Variable;
use crate::error::{Error, Result};
use crate::graph::{topological_order, MixedGraph, NodeId};

/// Largest CPT (rows × states) the fitter will allocate.
pub const MAX_CPT_ENTRIES: u128 = 1 << 26;

/// `P(node | parents)` as a `q × k` row-major table. Row `j` is the parent
/// configuration with the first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    node: NodeId,
    parents: Vec<NodeId>,
    parent_arities: Vec<usize>,
    arity: usize,
    table: Vec<f64>,
}

impl Cpt {
    pub fn new(node: NodeId, parents: Vec<NodeId>, parent_arities: Vec<usize>, arity: usize, table: Vec<f64>) -> Result<Self> {
        let cpt = Cpt { node, parents, parent_arities, arity, table };
        if cpt.parents.len() != cpt.parent_arities.len() {
            return Err(Error::Invalid("parent arity list length".into()));
        }
        if cpt.table.len() != cpt.rows() * arity {
            return Err(Error::Invalid(format!("table has {} entries, expected {}", cpt.table.len(), cpt.rows() * arity)));
        }
        for j in 0..cpt.rows() {
            let row = cpt.row(j);
            if row.iter().any(|&p| !(p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("row {j} of node {node} is not a distribution: {row:?}")));
            }
        }
        Ok(cpt)
    }

    pub fn uniform(node: NodeId, parents: Vec<NodeId>, parent_arities: Vec<usize>, arity: usize) -> Result<Self> {
        let rows = checked_rows(&parent_arities, arity).ok_or_else(|| Error::CptTooLarge(format!("node {node}"), u128::MAX))?;
        let table = vec![1.0 / arity as f64; rows * arity];
        Ok(Cpt { node, parents, parent_arities, arity, table })
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents
    }

    pub fn parent_arities(&self) -> &[usize] {
        &self.parent_arities
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn rows(&self) -> usize {
        self.parent_arities.iter().product()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.table[j * self.arity..(j + 1) * self.arity]
    }

    /// Row index of the parent configuration found in a full assignment.
    pub fn config_of(&self, assignment: &[u8]) -> usize {
        self.parents
            .iter()
            .zip(&self.parent_arities)
            .fold(0, |acc, (&p, &k)| acc * k + assignment[p] as usize)
    }

    pub fn prob(&self, assignment: &[u8]) -> f64 {
        self.table[self.config_of(assignment) * self.arity + assignment[self.node] as usize]
    }

    pub(crate) fn table_mut(&mut self) -> &mut [f64] {
        &mut self.table
    }
}

/// Row count of a CPT, or `None` when it exceeds [`MAX_CPT_ENTRIES`].
pub(crate) fn checked_rows(parent_arities: &[usize], arity: usize) -> Option<usize> {
    let mut size: u128 = arity as u128;
    for &k in parent_arities {
        size = size.checked_mul(k as u128)?;
        if size > MAX_CPT_ENTRIES {
            return None;
        }
    }
    Some(size as usize / arity)
}

/// A DAG with one CPT per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBn {
    graph: MixedGraph,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    order: Vec<NodeId>,
}

impl DiscreteBn {
    pub fn new(graph: MixedGraph, variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        graph.require_directed()?;
        let order = topological_order(&graph).ok_or(Error::Cyclic)?;
        if variables.len() != graph.n() || cpts.len() != graph.n() {
            return Err(Error::Invalid("one variable and one CPT per node required".into()));
        }
        for (i, (v, c)) in variables.iter().zip(&cpts).enumerate() {
            if v.name != graph.name(i) {
                return Err(Error::Invalid(format!("variable {:?} does not match node {:?}", v.name, graph.name(i))));
            }
            let mut ps = c.parents.clone();
            ps.sort_unstable();
            if c.node != i || ps != graph.parents(i) || c.arity != v.arity() {
                return Err(Error::Invalid(format!("CPT of {:?} does not match the graph", v.name)));
            }
            if c.parents.iter().zip(&c.parent_arities).any(|(&p, &k)| variables[p].arity() != k) {
                return Err(Error::Invalid(format!("parent arities of {:?} do not match", v.name)));
            }
        }
        Ok(DiscreteBn { graph, variables, cpts, order })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn arities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::arity).collect()
    }

    pub fn cpt(&self, i: NodeId) -> &Cpt {
        &self.cpts[i]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Nodes in a topological order (lowest index first among ready nodes).
    pub fn topological_order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn index_of(&self, name: &str) -> Option<NodeId> {
        self.graph.index_of(name)
    }

    /// `Π_i P(x_i | pa_i)` for a full assignment in node order.
    pub fn joint_probability(&self, assignment: &[u8]) -> f64 {
        self.cpts.iter().map(|c| c.prob(assignment)).product()
    }
}
