//! Line-oriented graph text format.
//!
//! ```text
//! Graph Nodes:
//! A;B;C
//!
//! Graph Edges:
//! 1. A --> B
//! 2. B o-> C
//! ```

use super::{Mark, MixedGraph};
use crate::error::{Error, Result};
use std::fmt::Write as _;

const TOKENS: [(&str, Mark, Mark); 9] = [
    ("-->", Mark::Tail, Mark::Arrow),
    ("<--", Mark::Arrow, Mark::Tail),
    ("---", Mark::Tail, Mark::Tail),
    ("o->", Mark::Circle, Mark::Arrow),
    ("<-o", Mark::Arrow, Mark::Circle),
    ("o-o", Mark::Circle, Mark::Circle),
    ("<->", Mark::Arrow, Mark::Arrow),
    ("--o", Mark::Tail, Mark::Circle),
    ("o--", Mark::Circle, Mark::Tail),
];

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Splits `A --> B` into the two names and the marks at each end.
fn split_edge(body: &str) -> Option<(&str, Mark, Mark, &str)> {
    let mut best: Option<(usize, usize, Mark, Mark)> = None;
    for (tok, ma, mb) in TOKENS {
        let mut from = 0;
        while let Some(p) = body[from..].find(tok) {
            let start = from + p;
            let end = start + tok.len();
            let left_ok = start > 0 && body[..start].ends_with(char::is_whitespace);
            let right_ok = body[end..].starts_with(char::is_whitespace);
            if left_ok && right_ok {
                if best.is_none_or(|b| start < b.0) {
                    best = Some((start, end, ma, mb));
                }
                break;
            }
            from = start + 1;
        }
    }
    let (start, end, ma, mb) = best?;
    Some((body[..start].trim(), ma, mb, body[end..].trim()))
}

/// Parses the graph text format. Whitespace around names and tokens is ignored.
pub fn parse_graph(text: &str) -> Result<MixedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, "Graph Nodes:")) => {}
        Some((ln, other)) => return Err(parse_err(ln, format!("expected `Graph Nodes:`, got {other:?}"))),
        None => return Err(Error::Empty("graph text".into())),
    }
    let (ln, names_line) = lines.next().ok_or_else(|| parse_err(1, "missing node list"))?;
    if names_line == "Graph Edges:" {
        return Err(parse_err(ln, "missing node list"));
    }
    let names: Vec<&str> = names_line.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
    let mut g = MixedGraph::new(names.iter().copied())?;

    match lines.next() {
        Some((_, "Graph Edges:")) => {}
        Some((ln, other)) => return Err(parse_err(ln, format!("expected `Graph Edges:`, got {other:?}"))),
        None => return Ok(g),
    }

    for (ln, line) in lines {
        // Trailing sections (e.g. `Graph Attributes:`) end the edge list.
        if line.ends_with(':') && split_edge(line).is_none() {
            break;
        }
        let body = match line.split_once('.') {
            Some((num, rest)) if num.trim().chars().all(|c| c.is_ascii_digit()) => rest,
            _ => line,
        };
        let (a, ma, mb, b) = split_edge(body).ok_or_else(|| parse_err(ln, format!("no edge mark in {line:?}")))?;
        let ia = g.index_of(a).ok_or_else(|| Error::UnknownNode(a.to_string()))?;
        let ib = g.index_of(b).ok_or_else(|| Error::UnknownNode(b.to_string()))?;
        if ia == ib {
            return Err(Error::SelfLoop(a.to_string()));
        }
        if g.is_adjacent(ia, ib) {
            return Err(parse_err(ln, format!("second edge between {a} and {b}")));
        }
        g.set_marks(ia, ma, ib, mb);
    }
    Ok(g)
}

/// Writes the graph text format. Edges are listed by ascending node pair.
pub fn write_graph(g: &MixedGraph) -> String {
    let mut s = String::from("Graph Nodes:\n");
    s.push_str(&g.names().join(";"));
    s.push_str("\n\nGraph Edges:\n");
    for (k, e) in g.edges().into_iter().enumerate() {
        let (a, b) = (g.name(e.a), g.name(e.b));
        let line = match (e.mark_a, e.mark_b) {
            (Mark::Tail, Mark::Arrow) => format!("{a} --> {b}"),
            (Mark::Arrow, Mark::Tail) => format!("{b} --> {a}"),
            (Mark::Tail, Mark::Tail) => format!("{a} --- {b}"),
            (Mark::Circle, Mark::Arrow) => format!("{a} o-> {b}"),
            (Mark::Arrow, Mark::Circle) => format!("{b} o-> {a}"),
            (Mark::Circle, Mark::Circle) => format!("{a} o-o {b}"),
            (Mark::Arrow, Mark::Arrow) => format!("{a} <-> {b}"),
            (Mark::Tail, Mark::Circle) => format!("{a} --o {b}"),
            (Mark::Circle, Mark::Tail) => format!("{b} --o {a}"),
        };
        let _ = writeln!(s, "{}. {}", k + 1, line);
    }
    s
}
