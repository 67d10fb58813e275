//! Report tables in CSV and Markdown, and top-k frequency summaries.
//!
//! Everything is rendered to strings first; CSV, Markdown and the rank
//! summaries all read the same cells, so rankings use the displayed values.

use crate::experiment::ReportRow;
use anyhow::{bail, Context, Result};
use bnbench_core::eval::rank_summary;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Columns before the per-target pairs.
pub const LEAD: [&str; 12] = ["test", "policy", "algorithm", "Chi2", "Df", "p", "BIC", "a", "d", "r", "m", "DDM"];
/// Columns after the per-target pairs.
pub const TRAIL: [&str; 3] = ["edges", "reversed", "error"];

/// Four significant digits; scientific outside `[1e-4, 1e6)`.
pub fn fmt_real(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs();
    if !(1e-4..1e6).contains(&mag) {
        return format!("{x:.3e}");
    }
    let exp = mag.log10().floor() as i32;
    if exp > 3 {
        let unit = 10f64.powi(exp - 3);
        return format!("{:.0}", (x / unit).round() * unit);
    }
    let decimals = (3 - exp) as usize;
    format!("{x:.decimals$}")
}

pub fn fmt_ddm(x: f64) -> String {
    format!("{x:.3}")
}

/// A report as rendered cells. Rows keep the experiment order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn auc_col(target: &str) -> String {
    format!("{target} AUC")
}

fn cc_col(target: &str) -> String {
    format!("{target} CC")
}

impl Table {
    pub fn from_rows(rows: &[ReportRow]) -> Table {
        let mut targets: Vec<String> = Vec::new();
        for r in rows {
            for t in &r.targets {
                if !targets.contains(&t.name) {
                    targets.push(t.name.clone());
                }
            }
        }
        let mut header: Vec<String> = LEAD.iter().map(|s| s.to_string()).collect();
        for t in &targets {
            header.push(auc_col(t));
            header.push(cc_col(t));
        }
        header.extend(TRAIL.iter().map(|s| s.to_string()));

        let opt = |v: Option<String>| v.unwrap_or_default();
        let body = rows
            .iter()
            .map(|r| {
                let s = r.stats.as_ref();
                let c = r.arcs.as_ref();
                let mut cells = vec![
                    r.test.clone(),
                    r.policy.label().to_string(),
                    r.algorithm.clone(),
                    opt(s.map(|s| fmt_real(s.chi2))),
                    opt(s.map(|s| s.df.to_string())),
                    opt(s.map(|s| fmt_real(s.p_value))),
                    opt(s.map(|s| fmt_real(s.bic))),
                    opt(c.map(|c| c.a.to_string())),
                    opt(c.map(|c| c.d.to_string())),
                    opt(c.map(|c| c.r.to_string())),
                    opt(c.map(|c| c.m.to_string())),
                    opt(r.ddm.map(fmt_ddm)),
                ];
                for name in &targets {
                    let rep = r.targets.iter().find(|t| &t.name == name).and_then(|t| t.report.as_ref());
                    cells.push(opt(rep.and_then(|p| p.summary_auc).map(fmt_real)));
                    cells.push(opt(rep.map(|p| fmt_real(p.cc))));
                }
                cells.push(opt(r.learned_edges.map(|e| e.to_string())));
                cells.push(opt(r.reversed_arcs.map(|e| e.to_string())));
                cells.push(opt(r.error.clone()));
                cells
            })
            .collect();
        Table { header, rows: body }
    }

    pub fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Target names, from the `<target> AUC` columns.
    pub fn targets(&self) -> Vec<String> {
        self.header.iter().filter_map(|h| h.strip_suffix(" AUC").map(str::to_string)).collect()
    }

    /// Row indices grouped by `(test, policy)`, in first-appearance order.
    pub fn groups(&self) -> Vec<((String, String), Vec<usize>)> {
        let mut out: Vec<((String, String), Vec<usize>)> = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let key = (row[0].clone(), row[1].clone());
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(i),
                None => out.push((key, vec![i])),
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
    }

    pub fn from_csv(text: &str) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < LEAD.len() + TRAIL.len() || header[..LEAD.len()] != LEAD.map(str::to_string) {
            bail!("not a report: unexpected header");
        }
        let rows = r.records().map(|rec| Ok(rec?.iter().map(str::to_string).collect())).collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Table { header, rows })
    }

    /// One Markdown table per `(test, policy)`. The best value of p, BIC,
    /// DDM and each AUC/CC column is bold (every tied row).
    pub fn to_markdown(&self) -> String {
        let bold_cols: Vec<usize> = self
            .header
            .iter()
            .enumerate()
            .filter(|(_, h)| matches!(h.as_str(), "p" | "BIC" | "DDM") || h.ends_with(" AUC") || h.ends_with(" CC"))
            .map(|(i, _)| i)
            .collect();
        let error_col = self.header.len() - 1;
        let shown: Vec<usize> = (2..self.header.len() - 1).collect();
        let mut out = String::new();
        for ((test, policy), idx) in self.groups() {
            let _ = writeln!(out, "## {test} ({policy})\n");
            let head: Vec<&str> = shown.iter().map(|&c| if self.header[c] == "Chi2" { "Chi²" } else { self.header[c].as_str() }).collect();
            let _ = writeln!(out, "| {} |", head.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
            let best: BTreeMap<usize, f64> = bold_cols
                .iter()
                .filter_map(|&c| {
                    idx.iter().filter_map(|&i| parse_cell(&self.rows[i][c])).max_by(f64::total_cmp).map(|b| (c, b))
                })
                .collect();
            for &i in &idx {
                let cells: Vec<String> = shown
                    .iter()
                    .map(|&c| {
                        let v = &self.rows[i][c];
                        match (best.get(&c), parse_cell(v)) {
                            (Some(&b), Some(x)) if x == b => format!("**{v}**"),
                            _ if v.is_empty() => "-".to_string(),
                            _ => v.clone(),
                        }
                    })
                    .collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            let errors: Vec<String> = idx
                .iter()
                .filter(|&&i| !self.rows[i][error_col].is_empty())
                .map(|&i| format!("- {}: {}", self.rows[i][2], self.rows[i][error_col]))
                .collect();
            if !errors.is_empty() {
                let _ = writeln!(out, "\nErrors:\n\n{}", errors.join("\n"));
            }
            out.push('\n');
        }
        out
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Per-model top-k frequencies for one metric family.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub k: usize,
    /// Metric label and its rows.
    pub metrics: Vec<(String, Vec<bnbench_core::eval::RankRow>)>,
}

/// Top-`k` frequencies for BIC and DDM (one test per `(test, policy)`)
/// and for AUC and CC (one test per `(test, policy, target)`). Higher is
/// better for all four. Tables with several reports are simply
/// concatenated.
pub fn rank_report(tables: &[Table], k: usize) -> RankReport {
    let mut by_metric: Vec<(String, Vec<Vec<(String, f64)>>)> =
        ["BIC", "DDM", "AUC", "CC"].iter().map(|m| (m.to_string(), Vec::new())).collect();
    for t in tables {
        let targets = t.targets();
        for (_, idx) in t.groups() {
            let collect = |col: usize| -> Vec<(String, f64)> {
                idx.iter().map(|&i| (t.rows[i][2].clone(), parse_cell(&t.rows[i][col]).unwrap_or(f64::NAN))).collect()
            };
            for (slot, name) in [(0, "BIC"), (1, "DDM")] {
                let test = collect(t.col(name).expect("lead column"));
                by_metric[slot].1.push(test);
            }
            for target in &targets {
                by_metric[2].1.push(collect(t.col(&auc_col(target)).expect("auc column")));
                by_metric[3].1.push(collect(t.col(&cc_col(target)).expect("cc column")));
            }
        }
    }
    let metrics = by_metric.into_iter().map(|(m, tests)| (m, rank_summary(&tests, k, true))).collect();
    RankReport { k, metrics }
}

impl RankReport {
    /// Model by metric grid of `percent% (in_top/tests)`.
    pub fn to_markdown(&self) -> String {
        let mut models: Vec<String> = Vec::new();
        for (_, rows) in &self.metrics {
            for r in rows {
                if !models.contains(&r.model) {
                    models.push(r.model.clone());
                }
            }
        }
        let mut out = format!("## Top-{} frequency\n\n| Model |", self.k);
        for (m, _) in &self.metrics {
            let _ = write!(out, " {m} |");
        }
        let _ = writeln!(out, "\n|{}", "---|".repeat(self.metrics.len() + 1));
        for model in &models {
            let _ = write!(out, "| {model} |");
            for (_, rows) in &self.metrics {
                match rows.iter().find(|r| &r.model == model).filter(|r| r.tests > 0) {
                    Some(r) => {
                        let _ = write!(out, " {:.2}% ({}/{}) |", r.percent, r.in_top, r.tests);
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// The three files a benchmark run writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub csv: String,
    pub markdown: String,
    pub ranks: String,
    pub errors: usize,
}

pub fn render(rows: &[ReportRow], k: usize) -> Result<Rendered> {
    let table = Table::from_rows(rows);
    Ok(Rendered {
        csv: table.to_csv()?,
        markdown: table.to_markdown(),
        ranks: rank_report(std::slice::from_ref(&table), k).to_markdown(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
    })
}

impl Rendered {
    /// Writes `report.csv`, `report.md` and `ranks.md` into `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, text) in [("report.csv", &self.csv), ("report.md", &self.markdown), ("ranks.md", &self.ranks)] {
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
