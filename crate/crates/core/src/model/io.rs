//! BN text format: the graph text format, a `Variable States:` section, then
//! one block per node:
//!
//! ```text
//! CPT B | A
//! 9.0000000000000002e-1 1.0000000000000001e-1
//! 2.0000000000000001e-1 8.0000000000000004e-1
//! ```
//!
//! Parent names are `;`-separated. Each of the `q` rows holds `k`
//! probabilities printed with 17 significant digits.

use super::{Cpt, DiscreteBn};
use crate::data::Variable;
use crate::error::{Error, Result};
use crate::graph::{parse_graph, write_graph};
use std::fmt::Write as _;

const STATES_HEADER: &str = "Variable States:";

pub fn write_bn(bn: &DiscreteBn) -> String {
    let mut s = write_graph(bn.graph());
    s.push('\n');
    s.push_str(STATES_HEADER);
    s.push('\n');
    for v in bn.variables() {
        let _ = writeln!(s, "{}: {}", v.name, v.states.join(";"));
    }
    for cpt in bn.cpts() {
        let names: Vec<&str> = cpt.parents().iter().map(|&p| bn.variables()[p].name.as_str()).collect();
        let _ = writeln!(s, "\nCPT {} | {}", bn.variables()[cpt.node()].name, names.join(";"));
        for j in 0..cpt.rows() {
            let row: Vec<String> = cpt.row(j).iter().map(|p| format!("{p:.16e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
    }
    s
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_bn(text: &str) -> Result<DiscreteBn> {
    let lines: Vec<&str> = text.lines().collect();
    let split = lines
        .iter()
        .position(|l| l.trim() == STATES_HEADER)
        .ok_or_else(|| err(lines.len(), "missing `Variable States:` section"))?;
    let graph = parse_graph(&lines[..split].join("\n"))?;
    let n = graph.n();

    let mut body = lines.iter().enumerate().skip(split + 1).map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).peekable();

    let mut states: Vec<Option<Vec<String>>> = vec![None; n];
    while let Some(&(ln, line)) = body.peek() {
        if line.starts_with("CPT ") {
            break;
        }
        body.next();
        let (name, list) = line.rsplit_once(':').ok_or_else(|| err(ln, "expected `name: s1;s2`"))?;
        let i = graph.index_of(name.trim()).ok_or_else(|| Error::UnknownNode(name.trim().into()))?;
        states[i] = Some(list.split(';').map(|s| s.trim().to_string()).collect());
    }
    let variables: Vec<Variable> = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let s = s.ok_or_else(|| err(0, format!("no states for {:?}", graph.name(i))))?;
            Variable::new(graph.name(i), s)
        })
        .collect::<Result<_>>()?;

    let mut cpts: Vec<Option<Cpt>> = vec![None; n];
    while let Some((ln, line)) = body.next() {
        let head = line.strip_prefix("CPT ").ok_or_else(|| err(ln, format!("expected CPT header, got {line:?}")))?;
        let (name, parents) = head.split_once('|').ok_or_else(|| err(ln, "CPT header needs `|`"))?;
        let node = graph.index_of(name.trim()).ok_or_else(|| Error::UnknownNode(name.trim().into()))?;
        let parents: Vec<usize> = parents
            .split(';')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| graph.index_of(p).ok_or_else(|| Error::UnknownNode(p.into())))
            .collect::<Result<_>>()?;
        let parent_arities: Vec<usize> = parents.iter().map(|&p| variables[p].arity()).collect();
        let k = variables[node].arity();
        let q: usize = parent_arities.iter().product();
        let mut table = Vec::with_capacity(q * k);
        for _ in 0..q {
            let (ln, row) = body.next().ok_or_else(|| err(lines.len(), format!("CPT of {:?} is truncated", name.trim())))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| err(ln, format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != k {
                return Err(err(ln, format!("expected {k} probabilities, got {}", vals.len())));
            }
            table.extend(vals);
        }
        cpts[node] = Some(Cpt::new(node, parents, parent_arities, k, table)?);
    }
    let cpts = cpts
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| err(0, format!("no CPT for {:?}", graph.name(i)))))
        .collect::<Result<_>>()?;
    DiscreteBn::new(graph, variables, cpts)
}
