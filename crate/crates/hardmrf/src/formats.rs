//! File formats. Variables, vertices and colors are 1-based in every file
//! and 0-based in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hardmrf_core::coloring::{BetaVector, Coloring, ConstraintGraph, SimpleGraph};
use hardmrf_core::conditions::InfluenceMatrix;
use hardmrf_core::sat::lll::Marking;
use hardmrf_core::sat::{Assignment, CnfFormula, Literal};
use hardmrf_core::ExactDistribution;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("I/O error on {path}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] hardmrf_core::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed { line, message: message.into() }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Parses DIMACS CNF: `c` comment lines, one `p cnf <vars> <clauses>`
/// header, then clauses as signed literals terminated by `0`, possibly
/// spanning lines. A line starting with `%` ends the input.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(malformed(line_no, "duplicate problem line"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(malformed(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let n = fields[2].parse().map_err(|_| malformed(line_no, "bad variable count"))?;
            let m = fields[3].parse().map_err(|_| malformed(line_no, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| malformed(line_no, "clause before problem line"))?;
        for token in line.split_whitespace() {
            let lit: i64 = token.parse().map_err(|_| malformed(line_no, format!("bad literal `{token}`")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = lit.unsigned_abs() as usize;
            if var > n {
                return Err(malformed(line_no, format!("variable {var} exceeds declared count {n}")));
            }
            current.push(if lit > 0 { Literal::pos(var - 1) } else { Literal::neg(var - 1) });
        }
    }
    let (n, m) = header.ok_or_else(|| malformed(last_line, "missing problem line"))?;
    if !current.is_empty() {
        return Err(malformed(last_line, "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(malformed(last_line, format!("declared {m} clauses, found {}", clauses.len())));
    }
    Ok(CnfFormula::new(n, clauses)?)
}

pub fn write_dimacs(formula: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", formula.num_vars(), formula.num_clauses());
    for clause in formula.clauses() {
        for lit in clause {
            let v = lit.var as i64 + 1;
            let _ = write!(out, "{} ", if lit.positive { v } else { -v });
        }
        out.push_str("0\n");
    }
    out
}

/// `{"n": 4, "edges": [[1, 2], [2, 3]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

fn to_zero_based(pairs: &[[usize; 2]], size: usize, what: &str) -> Result<Vec<(usize, usize)>> {
    pairs
        .iter()
        .map(|&[a, b]| {
            if a == 0 || b == 0 || a > size || b > size {
                Err(malformed(0, format!("{what} ({a}, {b}) outside 1..={size}")))
            } else {
                Ok((a - 1, b - 1))
            }
        })
        .collect()
}

impl GraphFile {
    pub fn from_graph(g: &SimpleGraph) -> Self {
        Self { n: g.num_vertices(), edges: g.edges().into_iter().map(|(u, v)| [u + 1, v + 1]).collect() }
    }

    pub fn to_graph(&self) -> Result<SimpleGraph> {
        Ok(SimpleGraph::new(self.n, &to_zero_based(&self.edges, self.n, "edge")?)?)
    }
}

/// `{"q": 3, "edges": [[1, 2]], "self_loops": [3]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFile {
    pub q: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub self_loops: Vec<usize>,
}

impl ConstraintFile {
    pub fn from_constraint(h: &ConstraintGraph) -> Self {
        let (edges, loops) = h.edge_lists();
        Self {
            q: h.q(),
            edges: edges.into_iter().map(|(a, b)| [a + 1, b + 1]).collect(),
            self_loops: loops.into_iter().map(|c| c + 1).collect(),
        }
    }

    pub fn to_constraint(&self) -> Result<ConstraintGraph> {
        let edges = to_zero_based(&self.edges, self.q, "color pair")?;
        let loops = self
            .self_loops
            .iter()
            .map(|&c| if c == 0 || c > self.q { Err(malformed(0, format!("self-loop {c} outside 1..={}", self.q))) } else { Ok(c - 1) })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConstraintGraph::new(self.q, &edges, &loops)?)
    }
}

/// A JSON array of either the `q − 1` free weights or all `q`.
pub fn beta_from_values(values: &[f64], q: usize) -> Result<BetaVector> {
    if values.len() + 1 == q {
        Ok(BetaVector::from_free(values))
    } else if values.len() == q {
        Ok(BetaVector::from_full(values)?)
    } else {
        Err(malformed(0, format!("beta has {} entries; expected {} or {q}", values.len(), q - 1)))
    }
}

/// A coloring is a JSON array of 1-based colors.
pub fn coloring_from_values(values: &[usize], q: usize) -> Result<Coloring> {
    values
        .iter()
        .map(|&c| if c == 0 || c > q { Err(malformed(0, format!("color {c} outside 1..={q}"))) } else { Ok(c - 1) })
        .collect::<Result<Vec<_>>>()
        .map(Coloring::new)
}

pub fn coloring_to_values(sigma: &Coloring) -> Vec<usize> {
    sigma.colors().iter().map(|c| c + 1).collect()
}

/// A SAT sample is a JSON array of 0/1 values.
pub fn assignment_from_values(values: &[u8]) -> Result<Assignment> {
    values
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(malformed(0, format!("assignment value {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()
        .map(Assignment::new)
}

pub fn assignment_to_values(sigma: &Assignment) -> Vec<u8> {
    sigma.bits().iter().map(|&b| b as u8).collect()
}

/// One state of an enumerated law; SAT states carry `bits` (variable 1
/// first), coloring states carry 1-based `colors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bits: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub colors: Option<Vec<usize>>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    #[serde(rename = "logZ")]
    pub log_z: f64,
    pub states: Vec<StateEntry>,
}

impl DistributionFile {
    pub fn from_sat(dist: &ExactDistribution, n: usize) -> Self {
        let states = dist
            .iter()
            .map(|(code, p)| {
                let bits: String = (0..n).map(|i| if (code >> i) & 1 == 1 { '1' } else { '0' }).collect();
                StateEntry { bits: Some(format!("0b{bits}")), colors: None, p }
            })
            .collect();
        Self { log_z: dist.log_partition(), states }
    }

    pub fn from_coloring(dist: &ExactDistribution, n: usize, q: usize) -> Self {
        let states = dist
            .iter()
            .map(|(code, p)| StateEntry {
                bits: None,
                colors: Some(coloring_to_values(&Coloring::from_code(code, n, q))),
                p,
            })
            .collect();
        Self { log_z: dist.log_partition(), states }
    }
}

/// `{"lambda": 0.28, "marked": [1, 4, 7]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkingFile {
    pub lambda: f64,
    pub marked: Vec<usize>,
}

impl MarkingFile {
    pub fn from_marking(m: &Marking) -> Self {
        Self { lambda: m.lambda, marked: m.marked_indices().into_iter().map(|i| i + 1).collect() }
    }

    pub fn to_marking(&self, num_vars: usize) -> Result<Marking> {
        let mut labels = vec![false; num_vars];
        for &i in &self.marked {
            if i == 0 || i > num_vars {
                return Err(malformed(0, format!("marked variable {i} outside 1..={num_vars}")));
            }
            labels[i - 1] = true;
        }
        Ok(Marking::new(labels, self.lambda))
    }
}

/// The influence matrix as CSV: a header `v,w1,…,wn` and one row per `v`.
pub fn influence_to_csv(m: &InfluenceMatrix) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let n = m.n();
    let mut header = vec!["v".to_string()];
    header.extend((1..=n).map(|w| format!("w{w}")));
    wtr.write_record(&header)?;
    for v in 0..n {
        let mut row = vec![(v + 1).to_string()];
        row.extend((0..n).map(|w| m.get(v, w).to_string()));
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| FormatError::Io { path: "<csv>".into(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn influence_from_csv(text: &str) -> Result<InfluenceMatrix> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut n = 0;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        n = record.len().saturating_sub(1);
        for field in record.iter().skip(1) {
            data.push(field.parse::<f64>().map_err(|_| malformed(idx + 2, format!("bad entry `{field}`")))?);
        }
    }
    Ok(InfluenceMatrix::from_row_major(n, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 0\n2 3\n -1 0\n";
        let f = parse_dimacs(text).unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.clause(1), &[Literal::pos(1), Literal::pos(2), Literal::neg(0)]);
        assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
    }

    #[test]
    fn dimacs_rejects_malformed_input() {
        for bad in ["1 2 0\n", "p cnf 2 1\n1 3 0\n", "p cnf 2 2\n1 2 0\n", "p cnf 2 1\n1 x 0\n", "p cnf 2 1\n1 2\n"] {
            assert!(matches!(parse_dimacs(bad), Err(FormatError::Malformed { .. })), "{bad:?}");
        }
        assert!(matches!(parse_dimacs("p cnf 2 1\n1 1 0\n"), Err(FormatError::Model(_))));
    }

    #[test]
    fn graph_files_are_one_based() {
        let g = GraphFile { n: 3, edges: vec![[1, 2], [3, 2]] }.to_graph().unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
        assert_eq!(GraphFile::from_graph(&g).edges, vec![[1, 2], [2, 3]]);
        assert!(GraphFile { n: 2, edges: vec![[0, 1]] }.to_graph().is_err());
        let h = ConstraintFile { q: 3, edges: vec![[1, 2]], self_loops: vec![3] };
        assert_eq!(ConstraintFile::from_constraint(&h.to_constraint().unwrap()), h);
    }

    #[test]
    fn beta_accepts_free_or_full() {
        assert_eq!(beta_from_values(&[0.5, 1.0], 3).unwrap().full(), &[0.5, 1.0, 0.0]);
        assert_eq!(beta_from_values(&[1.5, 2.0, 1.0], 3).unwrap().full(), &[0.5, 1.0, 0.0]);
        assert!(beta_from_values(&[1.0], 3).is_err());
    }

    #[test]
    fn influence_csv_round_trip() {
        let m = InfluenceMatrix::from_row_major(2, vec![0.0, 0.25, 1.0, 0.0]).unwrap();
        assert_eq!(influence_from_csv(&influence_to_csv(&m).unwrap()).unwrap(), m);
    }
}
