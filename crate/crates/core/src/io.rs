//! Text file formats.
//!
//! * graph: UTF-8 TSV, one undirected edge `u\tv` per line, 0-based ids,
//!   `#` lines ignored.
//! * labels: one integer per line, line `i` is the label of node `i`.
//! * features: CSV, row `i` is node `i`.
//!
//! NaN and infinite literals are rejected everywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LabelVector};
use crate::numerics::Mat;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses an edge list. The node count is `num_nodes` when given (ids must
/// fit), otherwise the largest id plus one.
pub fn parse_graph(text: &str, num_nodes: Option<usize>) -> Result<Graph> {
    let mut pairs = Vec::new();
    for (lineno, line) in content_lines(text) {
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse(format!(
                "graph line {lineno}: expected `u<TAB>v`, got {line:?}"
            )));
        };
        let parse = |s: &str| {
            s.trim().parse::<usize>().map_err(|_| {
                Error::Parse(format!("graph line {lineno}: bad node id {s:?}"))
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            return Err(Error::Parse(format!("graph line {lineno}: self-loop on {u}")));
        }
        pairs.push((u, v));
    }
    let inferred = pairs.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match num_nodes {
        Some(n) if n < inferred => {
            return Err(Error::Parse(format!(
                "edge list mentions node {} but only {n} nodes exist",
                inferred - 1
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    Graph::from_edges(n, pairs).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_graph(path: &Path, num_nodes: Option<usize>) -> Result<Graph> {
    parse_graph(&read(path)?, num_nodes)
}

pub fn format_graph(g: &Graph) -> String {
    let mut s = String::with_capacity(g.num_edges() * 10);
    for &(u, v) in g.edges() {
        let _ = writeln!(s, "{u}\t{v}");
    }
    s
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    write(path, &format_graph(g))
}

pub fn parse_labels(text: &str) -> Result<LabelVector> {
    let labels = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("labels line {}: bad label {l:?}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelVector::from_labels(labels))
}

pub fn read_labels(path: &Path) -> Result<LabelVector> {
    parse_labels(&read(path)?)
}

pub fn write_labels(path: &Path, y: &LabelVector) -> Result<()> {
    let mut s = String::new();
    for &l in y.as_slice() {
        let _ = writeln!(s, "{l}");
    }
    write(path, &s)
}

fn parse_float(tok: &str, lineno: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {lineno}: bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {lineno}: non-finite value {tok:?}")));
    }
    Ok(v)
}

/// Parses a dense CSV matrix.
pub fn parse_matrix_csv(text: &str) -> Result<Mat> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.split(',').map(|t| parse_float(t, i + 1)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Mat::from_rows(&rows).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    FeatureMatrix::new(parse_matrix_csv(&read(path)?)?)
}

/// Shortest round-trip representation of every entry.
pub fn format_matrix_csv(m: &Mat) -> String {
    let mut s = String::with_capacity(m.rows() * m.cols() * 12);
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:?}");
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    write(path, &format_matrix_csv(m))
}
