//! Undirected graphs, node labels and features, normalisations and
//! homophily metrics.
//!
//! The stored edge set never contains self-loops. Each normalisation decides
//! for itself whether to add the identity: [`NormMode::SymSelfLoop`] and
//! [`NormMode::Row`] use `A + I`, [`NormMode::Sym`] uses `A` as stored.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Simple undirected graph with sorted neighbour lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            neighbors: vec![Vec::new(); num_nodes],
            edges: Vec::new(),
        }
    }

    /// Builds from unordered pairs. `(u, v)` and `(v, u)` name the same edge
    /// and repeats collapse; self-loops and out-of-range ids are rejected.
    pub fn from_edges(num_nodes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in pairs {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Graph(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop on node {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph { neighbors, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.num_nodes() == 0 {
            return 0.0;
        }
        2.0 * self.num_edges() as f64 / self.num_nodes() as f64
    }

    /// Relabels so that new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let inv = inverse_permutation(perm, self.num_nodes())?;
        Graph::from_edges(
            self.num_nodes(),
            self.edges.iter().map(|&(u, v)| (inv[u], inv[v])),
        )
    }

    pub fn adjacency(&self) -> Mat {
        let n = self.num_nodes();
        let mut a = Mat::zeros(n, n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }
}

pub(crate) fn inverse_permutation(perm: &[usize], n: usize) -> Result<Vec<usize>> {
    if perm.len() != n {
        return Err(Error::Shape(format!(
            "permutation of length {} for {n} nodes",
            perm.len()
        )));
    }
    let mut inv = vec![usize::MAX; n];
    for (i, &p) in perm.iter().enumerate() {
        if p >= n || inv[p] != usize::MAX {
            return Err(Error::Shape("not a permutation".into()));
        }
        inv[p] = i;
    }
    Ok(inv)
}

/// Class ids in `[0, num_classes)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "at least two classes required, got {num_classes}"
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::Config(format!(
                "label {y} of node {i} outside [0, {num_classes})"
            )));
        }
        Ok(LabelVector {
            labels,
            num_classes,
        })
    }

    /// Infers `num_classes = max(max label + 1, 2)`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().map(|&y| y + 1).max().unwrap_or(0).max(2);
        LabelVector {
            labels,
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub fn permuted(&self, perm: &[usize]) -> LabelVector {
        LabelVector {
            labels: perm.iter().map(|&p| self.labels[p]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// One-hot `N × c` matrix.
    pub fn one_hot(&self) -> Mat {
        let mut m = Mat::zeros(self.len(), self.num_classes);
        for (i, &y) in self.labels.iter().enumerate() {
            m[(i, y)] = 1.0;
        }
        m
    }
}

/// Node attribute matrix `N × F` with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix(Mat);

impl FeatureMatrix {
    pub fn new(values: Mat) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::Parse("feature matrix has non-finite entries".into()));
        }
        Ok(FeatureMatrix(values))
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    /// `max_i ‖x_i‖₂`, the realised feature-norm bound.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.0.rows())
            .map(|r| crate::numerics::norm(self.0.row(r)))
            .fold(0.0, f64::max)
    }
}

/// Fraction of edges whose endpoints share a label.
pub fn edge_homophily(g: &Graph, y: &LabelVector) -> Result<f64> {
    check_labels(g, y)?;
    if g.num_edges() == 0 {
        return Err(Error::Graph("no edges".into()));
    }
    let same = g.edges().iter().filter(|&&(u, v)| y.get(u) == y.get(v)).count();
    Ok(same as f64 / g.num_edges() as f64)
}

/// Mean over non-isolated nodes of the same-label share of their neighbours.
pub fn node_homophily(g: &Graph, y: &LabelVector) -> Result<f64> {
    check_labels(g, y)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for v in 0..g.num_nodes() {
        let nb = g.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let same = nb.iter().filter(|&&u| y.get(u) == y.get(v)).count();
        total += same as f64 / nb.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::Graph("every node is isolated".into()));
    }
    Ok(total / counted as f64)
}

fn check_labels(g: &Graph, y: &LabelVector) -> Result<()> {
    if g.num_nodes() != y.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} nodes",
            y.len(),
            g.num_nodes()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// `D̄^{-1/2} (A + I) D̄^{-1/2}`.
    SymSelfLoop,
    /// `D̄^{-1} (A + I)`.
    Row,
    /// `D^{-1/2} A D^{-1/2}`, no self-loops; isolated nodes are an error.
    Sym,
}

/// Sparse normalised propagation operator `P` with `P·M` in `O(E·cols)`.
#[derive(Clone, Debug)]
pub struct Propagator {
    rows: Vec<Vec<(usize, f64)>>,
    mode: NormMode,
}

impl Propagator {
    pub fn new(g: &Graph, mode: NormMode) -> Result<Self> {
        let n = g.num_nodes();
        let self_loop = matches!(mode, NormMode::SymSelfLoop | NormMode::Row);
        let deg: Vec<f64> = (0..n)
            .map(|v| g.degree(v) as f64 + if self_loop { 1.0 } else { 0.0 })
            .collect();
        if mode == NormMode::Sym {
            if let Some(v) = (0..n).find(|&v| deg[v] == 0.0) {
                return Err(Error::Graph(format!("zero degree at node {v}")));
            }
        }
        let weight = |u: usize, v: usize| match mode {
            NormMode::Row => 1.0 / deg[u],
            NormMode::SymSelfLoop | NormMode::Sym => 1.0 / (deg[u] * deg[v]).sqrt(),
        };
        let rows = (0..n)
            .map(|u| {
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(g.degree(u) + 1);
                let mut pushed_self = !self_loop;
                for &v in g.neighbors(u) {
                    if !pushed_self && v > u {
                        row.push((u, weight(u, u)));
                        pushed_self = true;
                    }
                    row.push((v, weight(u, v)));
                }
                if !pushed_self {
                    row.push((u, weight(u, u)));
                }
                row
            })
            .collect();
        Ok(Propagator { rows, mode })
    }

    pub fn mode(&self) -> NormMode {
        self.mode
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.len()
    }

    /// `P · m`.
    pub fn apply(&self, m: &Mat) -> Result<Mat> {
        if m.rows() != self.rows.len() {
            return Err(Error::Shape(format!(
                "propagating {} rows over {} nodes",
                m.rows(),
                self.rows.len()
            )));
        }
        let mut out = Mat::zeros(m.rows(), m.cols());
        for (u, row) in self.rows.iter().enumerate() {
            let o = out.row_mut(u);
            for &(v, w) in row {
                for (a, b) in o.iter_mut().zip(m.row(v)) {
                    *a += w * b;
                }
            }
        }
        Ok(out)
    }

    /// `Pᵀ · m`; equals [`apply`](Self::apply) for the symmetric modes.
    pub fn apply_transpose(&self, m: &Mat) -> Result<Mat> {
        if m.rows() != self.rows.len() {
            return Err(Error::Shape(format!(
                "propagating {} rows over {} nodes",
                m.rows(),
                self.rows.len()
            )));
        }
        let mut out = Mat::zeros(m.rows(), m.cols());
        for (u, row) in self.rows.iter().enumerate() {
            let src = m.row(u);
            for &(v, w) in row {
                for (a, b) in out.row_mut(v).iter_mut().zip(src) {
                    *a += w * b;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.rows.len();
        let mut a = Mat::zeros(n, n);
        for (u, row) in self.rows.iter().enumerate() {
            for &(v, w) in row {
                a[(u, v)] = w;
            }
        }
        a
    }
}

pub fn normalized_adjacency(g: &Graph, mode: NormMode) -> Result<Mat> {
    Ok(Propagator::new(g, mode)?.to_dense())
}

/// `I − normalized_adjacency(g, mode)` for a symmetric mode.
pub fn sym_laplacian(g: &Graph, mode: NormMode) -> Result<Mat> {
    if mode == NormMode::Row {
        return Err(Error::Config(
            "the row-normalised adjacency has no symmetric Laplacian".into(),
        ));
    }
    let a = normalized_adjacency(g, mode)?;
    Ok(Mat::identity(g.num_nodes()).sub(&a)?)
}
