//! Edge dropping, edge adding, attribute masking and PPR diffusion.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, FeatureMatrix, Graph, NormMode};
use crate::numerics::{linear_solve, Mat};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    EdgeDrop,
    EdgeAdd,
    AttrMask,
    PprDiffusion,
}

impl std::str::FromStr for AugmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_drop" => Ok(AugmentKind::EdgeDrop),
            "edge_add" => Ok(AugmentKind::EdgeAdd),
            "attr_mask" => Ok(AugmentKind::AttrMask),
            "ppr" | "ppr_diffusion" => Ok(AugmentKind::PprDiffusion),
            other => Err(Error::Config(format!("unknown augmentation kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub kind: AugmentKind,
    #[serde(default)]
    pub ratio: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
}

fn default_alpha() -> f64 {
    0.15
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        check_ratio(self.ratio)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        Ok(())
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Config(format!("ratio {ratio} outside [0, 1]")));
    }
    Ok(())
}

fn count_for(ratio: f64, total: usize) -> usize {
    (ratio * total as f64).floor() as usize
}

/// Removes `⌊ratio·E⌋` edges chosen uniformly without replacement.
pub fn drop_edges(g: &Graph, ratio: f64, rng: &mut Rng) -> Result<Graph> {
    check_ratio(ratio)?;
    let e = g.num_edges();
    let k = count_for(ratio, e);
    let dropped: BTreeSet<usize> = index::sample(rng, e, k).into_iter().collect();
    let kept = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .map(|(_, &p)| p);
    Graph::from_edges(g.num_nodes(), kept)
}

/// Adds `⌊ratio·E⌋` new edges chosen uniformly among absent pairs.
pub fn add_edges(g: &Graph, ratio: f64, rng: &mut Rng) -> Result<Graph> {
    check_ratio(ratio)?;
    let n = g.num_nodes();
    let k = count_for(ratio, g.num_edges());
    let all_pairs = n * n.saturating_sub(1) / 2;
    let absent = all_pairs - g.num_edges();
    if k > absent {
        return Err(Error::Graph(format!(
            "cannot add {k} edges: only {absent} absent pairs"
        )));
    }
    let mut added: BTreeSet<(usize, usize)> = BTreeSet::new();
    if k > 0 && absent < 2 * k + 64 {
        // Dense case: enumerate the complement.
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v))
            .collect();
        for i in index::sample(rng, candidates.len(), k) {
            added.insert(candidates[i]);
        }
    } else {
        while added.len() < k {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u == v || g.has_edge(u, v) {
                continue;
            }
            added.insert((u.min(v), u.max(v)));
        }
    }
    Graph::from_edges(n, g.edges().iter().copied().chain(added))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Zero `⌊ratio·F⌋` whole columns.
    #[default]
    Columns,
    /// Zero `⌊ratio·N·F⌋` individual entries.
    Entries,
}

pub fn mask_attributes(x: &FeatureMatrix, ratio: f64, rng: &mut Rng) -> Result<FeatureMatrix> {
    mask_attributes_with(x, ratio, MaskMode::Columns, rng)
}

pub fn mask_attributes_with(x: &FeatureMatrix, ratio: f64, mode: MaskMode, rng: &mut Rng) -> Result<FeatureMatrix> {
    check_ratio(ratio)?;
    let mut m = x.as_mat().clone();
    let (n, f) = m.shape();
    match mode {
        MaskMode::Columns => {
            let cols = index::sample(rng, f, count_for(ratio, f)).into_vec();
            for r in 0..n {
                let row = m.row_mut(r);
                for &c in &cols {
                    row[c] = 0.0;
                }
            }
        }
        MaskMode::Entries => {
            let total = n * f;
            for i in index::sample(rng, total, count_for(ratio, total)) {
                m.as_mut_slice()[i] = 0.0;
            }
        }
    }
    FeatureMatrix::new(m)
}

/// `α (I − (1−α) A_sym)^{-1}` with `A_sym` the self-looped symmetric
/// normalisation. The result is symmetrised to remove solver round-off.
pub fn ppr_diffusion(g: &Graph, alpha: f64) -> Result<Mat> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 1]")));
    }
    let n = g.num_nodes();
    let a = normalized_adjacency(g, NormMode::SymSelfLoop)?;
    let mut system = Mat::identity(n);
    system.axpy(-(1.0 - alpha), &a)?;
    let inv = linear_solve(&system, &Mat::identity(n))?;
    inv.scale(alpha).symmetrized()
}
