//! Discrete datasets.
//!
//! Cells are stored column-major as state indices; [`MISSING`] marks an
//! absent value. State labels are sorted lexicographically at load so CPT
//! layouts and argmax tie-breaks are deterministic.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

/// Sentinel for a missing cell.
pub const MISSING: u8 = u8::MAX;

pub const MAX_ARITY: usize = 32;

/// Label given to the extra state created by [`Dataset::impute_missing_state`].
pub const MISSING_LABEL: &str = "MISSING";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if !(1..=MAX_ARITY).contains(&states.len()) {
            return Err(Error::Arity { column: name, arity: states.len() });
        }
        let unique: HashSet<&String> = states.iter().collect();
        if unique.len() != states.len() {
            return Err(Error::Invalid(format!("duplicate state label in {name:?}")));
        }
        Ok(Variable { name, states })
    }

    /// Variable with states `0`, `1`, ..., `k - 1`.
    pub fn indexed(name: impl Into<String>, k: usize) -> Result<Self> {
        Variable::new(name, (0..k).map(|s| s.to_string()))
    }

    pub fn arity(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<u8> {
        self.states.iter().position(|s| s == label).map(|i| i as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<Variable>,
    columns: Vec<Vec<u8>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from columns of state indices.
    pub fn new(variables: Vec<Variable>, columns: Vec<Vec<u8>>) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::Invalid(format!(
                "{} variables but {} columns",
                variables.len(),
                columns.len()
            )));
        }
        let mut names = HashSet::new();
        for v in &variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::DuplicateNode(v.name.clone()));
            }
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (v, col) in variables.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::Invalid(format!("column {:?} has {} rows, expected {n_rows}", v.name, col.len())));
            }
            if let Some(&bad) = col.iter().find(|&&c| c != MISSING && c as usize >= v.arity()) {
                return Err(Error::Invalid(format!("state {bad} out of range for {:?}", v.name)));
            }
        }
        Ok(Dataset { variables, columns, n_rows })
    }

    /// Builds a dataset from row-major cells.
    pub fn from_rows(variables: Vec<Variable>, rows: &[Vec<u8>]) -> Result<Self> {
        let m = variables.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); m];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::RowLength { row: r + 1, found: row.len(), expected: m });
            }
            for (c, &v) in row.iter().enumerate() {
                columns[c].push(v);
            }
        }
        Dataset::new(variables, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn arity(&self, i: usize) -> usize {
        self.variables[i].arity()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::arity).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn column(&self, i: usize) -> &[u8] {
        &self.columns[i]
    }

    pub fn value(&self, row: usize, col: usize) -> u8 {
        self.columns[col][row]
    }

    pub fn row(&self, r: usize) -> Vec<u8> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(|c| c.contains(&MISSING))
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(|c| c.iter().filter(|&&v| v == MISSING).count()).sum()
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> Dataset {
        let n = n.min(self.n_rows);
        Dataset {
            variables: self.variables.clone(),
            columns: self.columns.iter().map(|c| c[..n].to_vec()).collect(),
            n_rows: n,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            variables: self.variables.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            n_rows: rows.len(),
        }
    }

    /// Rows without any missing cell.
    pub fn complete_rows(&self) -> Dataset {
        let keep: Vec<usize> = (0..self.n_rows)
            .filter(|&r| self.columns.iter().all(|c| c[r] != MISSING))
            .collect();
        self.select_rows(&keep)
    }

    /// Column `i` of the result is column `order[i]` of `self`.
    pub fn select_columns(&self, order: &[usize]) -> Dataset {
        Dataset {
            variables: order.iter().map(|&i| self.variables[i].clone()).collect(),
            columns: order.iter().map(|&i| self.columns[i].clone()).collect(),
            n_rows: self.n_rows,
        }
    }

    /// Blanks each cell independently with probability `rate`.
    pub fn mask_mcar(&self, rate: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for r in 0..self.n_rows {
            for c in 0..self.n_vars() {
                if rng.random::<f64>() < rate {
                    out.columns[c][r] = MISSING;
                }
            }
        }
        out
    }

    /// Adds a trailing `MISSING` state to every column that has missing
    /// cells and assigns it to those cells. Complete columns are untouched.
    pub fn impute_missing_state(&self) -> Dataset {
        let mut out = self.clone();
        for (v, col) in out.variables.iter_mut().zip(out.columns.iter_mut()) {
            if !col.contains(&MISSING) {
                continue;
            }
            let mut label = MISSING_LABEL.to_string();
            while v.states.contains(&label) {
                label.push('_');
            }
            let code = v.states.len() as u8;
            v.states.push(label);
            for c in col.iter_mut().filter(|c| **c == MISSING) {
                *c = code;
            }
        }
        out
    }

    /// Joint counts over `vars`, skipping rows with a missing cell in any
    /// of them. The last variable varies fastest.
    pub fn counts(&self, vars: &[usize]) -> ContingencyTable {
        let arities: Vec<usize> = vars.iter().map(|&v| self.arity(v)).collect();
        let size: usize = arities.iter().product();
        let mut counts = vec![0u64; size];
        'rows: for r in 0..self.n_rows {
            let mut idx = 0;
            for (&v, &k) in vars.iter().zip(&arities) {
                let s = self.columns[v][r];
                if s == MISSING {
                    continue 'rows;
                }
                idx = idx * k + s as usize;
            }
            counts[idx] += 1;
        }
        ContingencyTable { vars: vars.to_vec(), arities, counts }
    }

    pub fn load_csv(path: impl AsRef<Path>, missing_token: &str) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Dataset::read_csv(file, missing_token)
    }

    /// Reads comma-separated data with a header of unique names. Each
    /// column's states are its distinct non-missing tokens, sorted.
    pub fn read_csv<R: Read>(reader: R, missing_token: &str) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(Error::Empty("csv file".into())),
        };
        let names: Vec<String> = header.iter().map(str::to_string).collect();
        let m = names.len();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); m];
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != m {
                return Err(Error::RowLength { row: i + 2, found: rec.len(), expected: m });
            }
            for (c, field) in rec.iter().enumerate() {
                raw[c].push(field.to_string());
            }
        }
        if raw.first().is_none_or(Vec::is_empty) {
            return Err(Error::Empty("csv file has no data rows".into()));
        }
        let mut variables = Vec::with_capacity(m);
        let mut columns = Vec::with_capacity(m);
        for (name, cells) in names.into_iter().zip(raw) {
            let states: BTreeSet<&str> = cells.iter().map(String::as_str).filter(|c| *c != missing_token).collect();
            if !(2..=MAX_ARITY).contains(&states.len()) {
                return Err(Error::Arity { column: name, arity: states.len() });
            }
            let lookup: HashMap<&str, u8> = states.iter().enumerate().map(|(i, s)| (*s, i as u8)).collect();
            let col = cells
                .iter()
                .map(|c| if c == missing_token { MISSING } else { lookup[c.as_str()] })
                .collect();
            variables.push(Variable { name, states: states.into_iter().map(str::to_string).collect() });
            columns.push(col);
        }
        Dataset::new(variables, columns)
    }

    pub fn write_csv<W: Write>(&self, writer: W, missing_token: &str) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(self.variables.iter().map(|v| v.name.as_str()))?;
        for r in 0..self.n_rows {
            w.write_record(self.variables.iter().zip(&self.columns).map(|(v, c)| match c[r] {
                MISSING => missing_token,
                s => v.states[s as usize].as_str(),
            }))?;
        }
        w.flush().map_err(|source| Error::Io { path: "<csv writer>".into(), source })?;
        Ok(())
    }

    pub fn to_csv_string(&self, missing_token: &str) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, missing_token).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 labels")
    }
}

/// Joint counts over a variable subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub vars: Vec<usize>,
    pub arities: Vec<usize>,
    /// Row-major, last variable fastest.
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, states: &[usize]) -> u64 {
        let idx = states.iter().zip(&self.arities).fold(0, |acc, (&s, &k)| acc * k + s);
        self.counts[idx]
    }

    /// Sums out every variable not at a position listed in `keep`.
    pub fn marginalize(&self, keep: &[usize]) -> ContingencyTable {
        let arities: Vec<usize> = keep.iter().map(|&p| self.arities[p]).collect();
        let mut counts = vec![0u64; arities.iter().product()];
        let mut states = vec![0usize; self.arities.len()];
        for &c in &self.counts {
            let idx = keep.iter().fold(0, |acc, &p| acc * self.arities[p] + states[p]);
            counts[idx] += c;
            for p in (0..states.len()).rev() {
                states[p] += 1;
                if states[p] < self.arities[p] {
                    break;
                }
                states[p] = 0;
            }
        }
        ContingencyTable { vars: keep.iter().map(|&p| self.vars[p]).collect(), arities, counts }
    }
}

/// Row-to-configuration map for a variable subset.
#[derive(Debug, Clone)]
pub(crate) struct Strata {
    /// Configuration id per row; `u32::MAX` for rows with a missing cell.
    pub ids: Vec<u32>,
    pub count: usize,
}

pub(crate) const EXCLUDED: u32 = u32::MAX;

/// Assigns every complete row a configuration id over `vars`. Ids are
/// mixed-radix indices while those stay small; otherwise they are
/// compressed in order of first appearance.
pub(crate) fn stratify(d: &Dataset, vars: &[usize]) -> Strata {
    let n = d.n_rows();
    let dense_limit = (n as u64).max(1 << 16);
    let mut ids = vec![0u64; n];
    let mut excluded = vec![false; n];
    let mut radix: u64 = 1;
    for &v in vars {
        let k = d.arity(v) as u64;
        if radix.saturating_mul(k) > dense_limit {
            radix = compress(&mut ids, &excluded);
        }
        let col = d.column(v);
        for r in 0..n {
            let s = col[r];
            if s == MISSING {
                excluded[r] = true;
            } else {
                ids[r] = ids[r] * k + s as u64;
            }
        }
        radix *= k;
    }
    if radix > dense_limit {
        radix = compress(&mut ids, &excluded);
    }
    Strata {
        ids: ids.iter().zip(&excluded).map(|(&i, &x)| if x { EXCLUDED } else { i as u32 }).collect(),
        count: radix as usize,
    }
}

fn compress(ids: &mut [u64], excluded: &[bool]) -> u64 {
    let mut map: HashMap<u64, u64> = HashMap::new();
    for (id, &x) in ids.iter_mut().zip(excluded) {
        if x {
            continue;
        }
        let next = map.len() as u64;
        *id = *map.entry(*id).or_insert(next);
    }
    map.len().max(1) as u64
}

/// Result of equal-frequency binning.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    pub variable: Variable,
    pub codes: Vec<u8>,
    /// Lower bound of bins `1..k`; bin `i` is `[cut[i-1], cut[i])`.
    pub cut_points: Vec<f64>,
}

/// Bins `values` into `k` states with cut points at the empirical `i/k`
/// quantiles and half-open intervals.
pub fn discretize_equal_frequency(name: &str, values: &[f64], k: usize) -> Result<Discretized> {
    if !(2..=MAX_ARITY).contains(&k) {
        return Err(Error::Arity { column: name.to_string(), arity: k });
    }
    if values.is_empty() {
        return Err(Error::Empty("values".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Invalid("NaN in values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if k > distinct.len() {
        return Err(Error::TooFewDistinct { bins: k, distinct: distinct.len() });
    }
    let n = sorted.len();
    let cut_points: Vec<f64> = (1..k).map(|i| sorted[i * n / k]).collect();
    let codes = values
        .iter()
        .map(|v| cut_points.iter().filter(|&&c| c <= *v).count() as u8)
        .collect();
    let width = (k - 1).to_string().len();
    let variable = Variable::new(name, (0..k).map(|i| format!("q{i:0width$}")))?;
    Ok(Discretized { variable, codes, cut_points })
}
