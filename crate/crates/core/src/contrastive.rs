//! Positive mining, the transformed graph, the contrastive objective and the
//! training loop.
//!
//! One epoch: forward the whole graph, draw `b` seeds and their `T`-hop pool,
//! take each seed's `K_pos` most cosine-similar pool nodes as positives, draw
//! `K_neg` uniform negatives per seed and descend
//!
//! ```text
//! L = −(2/|P|) Σ_{(i,p)∈P} z_iᵀz_p + (1/|Q|) Σ_{(a,k)∈Q} (z_aᵀz_k)²
//! ```
//!
//! with `P`, `Q` the realised positive and negative pairs.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::encoder::{backward, forward, init_params, weight_norm_sums, EncoderParams, EncoderShape, Mode};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LabelVector};
use crate::numerics::{cosine, dot, symmetric_eig, EigenDecomposition, Mat};
use crate::rng::{rng_from_seed, Rng};

/// Draws `b` seeds uniformly without replacement and returns them with the
/// union of their `T`-hop neighbourhoods, both sorted ascending.
pub fn sample_pool(g: &Graph, b: usize, hops: usize, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = g.num_nodes();
    if b > n {
        return Err(Error::Config(format!("batch {b} exceeds {n} nodes")));
    }
    let mut seeds = index::sample(rng, n, b).into_vec();
    seeds.sort_unstable();
    Ok((seeds.clone(), hop_pool(g, &seeds, hops)))
}

/// Nodes within `hops` steps of any seed, seeds included.
pub fn hop_pool(g: &Graph, seeds: &[usize], hops: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.num_nodes()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if dist[u] == hops {
            continue;
        }
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..g.num_nodes()).filter(|&v| dist[v] != usize::MAX).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositiveSet {
    num_nodes: usize,
    seeds: Vec<usize>,
    /// `(node, cosine similarity)` per seed, most similar first.
    positives: Vec<Vec<(usize, f64)>>,
}

impl PositiveSet {
    /// Builds a set from explicit lists; similarities are recorded as NaN.
    pub fn from_lists(num_nodes: usize, lists: Vec<(usize, Vec<usize>)>) -> Result<Self> {
        let mut seeds = Vec::new();
        let mut positives = Vec::new();
        for (s, list) in lists {
            if s >= num_nodes || list.iter().any(|&p| p >= num_nodes) {
                return Err(Error::Graph(format!("positive list of seed {s} leaves 0..{num_nodes}")));
            }
            if list.contains(&s) {
                return Err(Error::Graph(format!("seed {s} listed as its own positive")));
            }
            seeds.push(s);
            positives.push(list.into_iter().map(|p| (p, f64::NAN)).collect());
        }
        Ok(PositiveSet {
            num_nodes,
            seeds,
            positives,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn positives_of(&self, idx: usize) -> &[(usize, f64)] {
        &self.positives[idx]
    }

    /// Directed `(seed, positive)` pairs in seed order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.seeds
            .iter()
            .zip(&self.positives)
            .flat_map(|(&s, list)| list.iter().map(move |&(p, _)| (s, p)))
    }

    pub fn num_pairs(&self) -> usize {
        self.positives.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_pairs() == 0
    }
}

/// For every seed, the `k_pos` pool nodes other than the seed with the highest
/// cosine similarity of their `z` rows, ties to the lower id.
pub fn mine_positives(z: &Mat, seeds: &[usize], pool: &[usize], k_pos: usize) -> Result<PositiveSet> {
    let n = z.rows();
    if seeds.iter().chain(pool).any(|&v| v >= n) {
        return Err(Error::Shape(format!("seed or pool id outside 0..{n}")));
    }
    let mut positives = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let mut cands: Vec<(usize, f64)> = pool
            .iter()
            .filter(|&&v| v != s)
            .map(|&v| (v, cosine(z.row(s), z.row(v))))
            .collect();
        if cands.len() < k_pos {
            return Err(Error::Graph(format!(
                "seed {s}: pool has {} candidates, need {k_pos}",
                cands.len()
            )));
        }
        let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if k_pos < cands.len() && k_pos > 0 {
            cands.select_nth_unstable_by(k_pos - 1, order);
        }
        cands.truncate(k_pos);
        cands.sort_by(order);
        positives.push(cands);
    }
    Ok(PositiveSet {
        num_nodes: n,
        seeds: seeds.to_vec(),
        positives,
    })
}

/// Graph on the original node set whose edges are the mined positive pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedGraph {
    num_nodes: usize,
    directed: Vec<(usize, usize)>,
    /// Undirected view, `u ≤ v`, sorted.
    undirected: Vec<(usize, usize)>,
}

pub fn build_transformed_graph(pos: &PositiveSet, num_nodes: usize) -> Result<TransformedGraph> {
    TransformedGraph::from_pairs(num_nodes, pos.pairs())
}

impl TransformedGraph {
    /// From arbitrary directed pairs. Self-pairs are kept as self-loops of
    /// the undirected view (`Â_ii = 1`).
    pub fn from_pairs(num_nodes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let directed: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        if let Some(&(u, v)) = directed.iter().find(|&&(u, v)| u >= num_nodes || v >= num_nodes) {
            return Err(Error::Graph(format!("pair ({u}, {v}) outside 0..{num_nodes}")));
        }
        let undirected: BTreeSet<(usize, usize)> = directed.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        Ok(TransformedGraph {
            num_nodes,
            directed: directed.into_iter().collect(),
            undirected: undirected.into_iter().collect(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn directed_edges(&self) -> &[(usize, usize)] {
        &self.directed
    }

    pub fn undirected_edges(&self) -> &[(usize, usize)] {
        &self.undirected
    }

    /// Symmetric 0/1 adjacency `Â` of the undirected view.
    pub fn adjacency(&self) -> Mat {
        let mut a = Mat::zeros(self.num_nodes, self.num_nodes);
        for &(u, v) in &self.undirected {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Row sums of `Â`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.num_nodes];
        for &(u, v) in &self.undirected {
            d[u] += 1.0;
            if u != v {
                d[v] += 1.0;
            }
        }
        d
    }

    /// `D̂^{-1/2} Â D̂^{-1/2}`; isolated nodes are an error.
    pub fn a_sym(&self) -> Result<Mat> {
        let d = self.degrees();
        if let Some(v) = d.iter().position(|&x| x == 0.0) {
            return Err(Error::Graph(format!("zero degree at node {v}")));
        }
        let mut a = Mat::zeros(self.num_nodes, self.num_nodes);
        for &(u, v) in &self.undirected {
            let w = 1.0 / (d[u] * d[v]).sqrt();
            a[(u, v)] = w;
            a[(v, u)] = w;
        }
        Ok(a)
    }

    pub fn laplacian(&self) -> Result<Mat> {
        Mat::identity(self.num_nodes).sub(&self.a_sym()?)
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        symmetric_eig(&self.laplacian()?)
    }

    /// Common out-degree `d` when `Ê` is symmetric and every node has exactly
    /// `d ≥ 1` out-edges, in which case `Â_sym = Â/d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let mut out = vec![0usize; self.num_nodes];
        for &(u, _) in &self.directed {
            out[u] += 1;
        }
        let d = *out.first()?;
        let symmetric = self.directed.iter().all(|&(u, v)| self.directed.binary_search(&(v, u)).is_ok());
        (d > 0 && symmetric && out.iter().all(|&x| x == d)).then_some(d)
    }

    /// Fraction of undirected edges (self-loops included) joining equal labels.
    pub fn edge_homophily(&self, y: &LabelVector) -> Result<f64> {
        if y.len() != self.num_nodes {
            return Err(Error::Shape(format!("{} labels for {} nodes", y.len(), self.num_nodes)));
        }
        if self.undirected.is_empty() {
            return Err(Error::Graph("no edges".into()));
        }
        let same = self.undirected.iter().filter(|&&(u, v)| y.get(u) == y.get(v)).count();
        Ok(same as f64 / self.undirected.len() as f64)
    }
}

/// Directed `(anchor, negative)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativePairs(pub Vec<(usize, usize)>);

/// `k_neg` uniform draws from `0..n` with replacement for every anchor.
pub fn sample_negatives(anchors: &[usize], n: usize, k_neg: usize, rng: &mut Rng) -> NegativePairs {
    let mut pairs = Vec::with_capacity(anchors.len() * k_neg);
    for &a in anchors {
        for _ in 0..k_neg {
            pairs.push((a, rng.random_range(0..n)));
        }
    }
    NegativePairs(pairs)
}

/// Sampled objective and its gradient with respect to `z`.
pub fn empirical_loss_and_grad(z: &Mat, pos: &PositiveSet, neg: &NegativePairs) -> Result<(f64, Mat)> {
    if pos.is_empty() {
        return Err(Error::Config("empty positive set".into()));
    }
    if neg.0.is_empty() {
        return Err(Error::Config("empty negative set".into()));
    }
    let n = z.rows();
    if pos.num_nodes() != n || neg.0.iter().any(|&(a, k)| a >= n || k >= n) {
        return Err(Error::Shape(format!("pairs do not index the {n} embedding rows")));
    }
    let c_pos = 2.0 / pos.num_pairs() as f64;
    let c_neg = 1.0 / neg.0.len() as f64;
    let mut loss = 0.0;
    let mut grad = Mat::zeros(n, z.cols());
    let add = |grad: &mut Mat, row: usize, alpha: f64, src: usize| {
        let s = z.row(src);
        for (g, v) in grad.row_mut(row).iter_mut().zip(s) {
            *g += alpha * v;
        }
    };
    for (i, p) in pos.pairs() {
        loss -= c_pos * dot(z.row(i), z.row(p));
        add(&mut grad, i, -c_pos, p);
        add(&mut grad, p, -c_pos, i);
    }
    for &(a, k) in &neg.0 {
        let s = dot(z.row(a), z.row(k));
        loss += c_neg * s * s;
        add(&mut grad, a, 2.0 * c_neg * s, k);
        add(&mut grad, k, 2.0 * c_neg * s, a);
    }
    Ok((loss, grad))
}

/// `−2·mean_{(i,j)∈Ê} z_iᵀz_j + (1/N²) Σ_{j,k} (z_jᵀz_k)²`.
pub fn exact_loss(z: &Mat, tg: &TransformedGraph) -> Result<f64> {
    if tg.directed_edges().is_empty() {
        return Err(Error::Graph("empty positive edge set".into()));
    }
    if z.rows() != tg.num_nodes() {
        return Err(Error::Shape(format!("{} rows for {} nodes", z.rows(), tg.num_nodes())));
    }
    let e = tg.directed_edges();
    let pos: f64 = e.iter().map(|&(i, j)| dot(z.row(i), z.row(j))).sum::<f64>() / e.len() as f64;
    let n = z.rows() as f64;
    let gram = z.t_matmul(z)?;
    Ok(-2.0 * pos + gram.frobenius_sq() / (n * n))
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Mat>,
    v: Vec<Mat>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&(r, c)| Mat::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| Mat::zeros(r, c)).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [&mut Mat], grads: &[&Mat]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "{} params and {} grads for {} optimiser slots",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(Error::Shape(format!(
                    "param {:?} / grad {:?} vs slot {:?}",
                    p.shape(),
                    g.shape(),
                    m.shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::Numeric("non-finite gradient".into()));
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let (p, g) = (p.as_mut_slice(), g.as_slice());
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.as_mut_slice()).zip(v.as_mut_slice()) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub k_pos: usize,
    pub k_neg: usize,
    /// Seeds per epoch; clamped to the node count.
    pub batch: usize,
    pub hops: usize,
    /// Embedding width `K`; the hidden and projection widths follow it
    /// unless `hidden` is set.
    pub embed_dim: usize,
    pub hidden: Option<usize>,
    pub epochs: usize,
    pub bn_enabled: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            k_pos: 5,
            k_neg: 100,
            batch: 512,
            hops: 2,
            embed_dim: 64,
            hidden: None,
            epochs: 100,
            bn_enabled: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_pos", self.k_pos),
            ("k_neg", self.k_neg),
            ("batch", self.batch),
            ("hops", self.hops),
            ("embed_dim", self.embed_dim),
            ("hidden", self.hidden.unwrap_or(1)),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be >= 1")));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr {} must be positive", self.lr)));
        }
        Ok(())
    }

    pub fn encoder_shape(&self, in_dim: usize) -> EncoderShape {
        EncoderShape {
            hidden: self.hidden.unwrap_or(self.embed_dim),
            ..EncoderShape::uniform(in_dim, self.embed_dim)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub node_cover_ratio: f64,
    /// `None` in the first epoch.
    pub overlap_ratio: Option<f64>,
    pub class_center_distance: Option<f64>,
    pub transformed_homophily: Option<f64>,
    pub true_positive_ratio: Option<f64>,
    /// `Σ_k ‖w_k‖²` of `w1, w2, p1, p2`.
    pub weight_norms: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub epochs: Vec<EpochMetrics>,
}

/// `|e^{t} ∩ e^{t−1}| / |e^{t}|` over directed positive pairs.
pub fn overlap_ratio(current: &PositiveSet, previous: &PositiveSet) -> f64 {
    let prev: BTreeSet<(usize, usize)> = previous.pairs().collect();
    let cur: BTreeSet<(usize, usize)> = current.pairs().collect();
    if cur.is_empty() {
        return 0.0;
    }
    cur.intersection(&prev).count() as f64 / cur.len() as f64
}

/// Cumulative set of nodes touched by positive pairs.
#[derive(Clone, Debug)]
pub struct CoverTracker {
    seen: Vec<bool>,
    count: usize,
}

impl CoverTracker {
    pub fn new(num_nodes: usize) -> Self {
        CoverTracker {
            seen: vec![false; num_nodes],
            count: 0,
        }
    }

    /// Adds both ends of every positive pair and returns the cover ratio.
    pub fn update(&mut self, pos: &PositiveSet) -> f64 {
        for (s, p) in pos.pairs() {
            for v in [s, p] {
                if !self.seen[v] {
                    self.seen[v] = true;
                    self.count += 1;
                }
            }
        }
        self.ratio()
    }

    pub fn ratio(&self) -> f64 {
        if self.seen.is_empty() {
            return 0.0;
        }
        self.count as f64 / self.seen.len() as f64
    }
}

/// Mean over nodes of `1 − cos(z_i, c_{y_i})` with `c_y` the class mean.
pub fn class_center_distance(z: &Mat, y: &LabelVector) -> Result<f64> {
    if z.rows() != y.len() || y.is_empty() {
        return Err(Error::Shape(format!("{} rows for {} labels", z.rows(), y.len())));
    }
    let c = y.num_classes();
    let mut centers = Mat::zeros(c, z.cols());
    let counts = y.class_counts();
    for i in 0..z.rows() {
        let k = y.get(i);
        for (a, v) in centers.row_mut(k).iter_mut().zip(z.row(i)) {
            *a += v / counts[k] as f64;
        }
    }
    let total: f64 = (0..z.rows()).map(|i| 1.0 - cosine(z.row(i), centers.row(y.get(i)))).sum();
    Ok(total / z.rows() as f64)
}

/// Fraction of directed positive pairs with equal labels.
pub fn true_positive_ratio(pos: &PositiveSet, y: &LabelVector) -> Option<f64> {
    let total = pos.num_pairs();
    (total > 0).then(|| pos.pairs().filter(|&(s, p)| y.get(s) == y.get(p)).count() as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRecord {
    pub overlap_ratio: Option<f64>,
    pub node_cover_ratio: f64,
    pub class_center_distance: Option<f64>,
    pub true_positive_ratio: Option<f64>,
    pub transformed_homophily: Option<f64>,
}

/// Diagnostics of one epoch's selection. `cover` accumulates across calls.
pub fn dynamics_metrics(
    z: &Mat,
    pos: &PositiveSet,
    previous: Option<&PositiveSet>,
    labels: Option<&LabelVector>,
    cover: &mut CoverTracker,
) -> Result<DynamicsRecord> {
    let node_cover_ratio = cover.update(pos);
    let overlap_ratio = previous.map(|p| overlap_ratio(pos, p));
    let (mut ccd, mut tpr, mut homo) = (None, None, None);
    if let Some(y) = labels {
        ccd = Some(class_center_distance(z, y)?);
        tpr = true_positive_ratio(pos, y);
        let tg = build_transformed_graph(pos, z.rows())?;
        homo = tg.edge_homophily(y).ok();
    }
    Ok(DynamicsRecord {
        overlap_ratio,
        node_cover_ratio,
        class_center_distance: ccd,
        true_positive_ratio: tpr,
        transformed_homophily: homo,
    })
}

/// Runs the training loop. Labels feed the diagnostics only.
pub fn train(g: &Graph, x: &FeatureMatrix, config: &TrainConfig, labels: Option<&LabelVector>) -> Result<(EncoderParams, TrainMetrics)> {
    let mut on_epoch = |_: &EpochMetrics| {};
    train_with(g, x, config, labels, &mut on_epoch)
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    g: &Graph,
    x: &FeatureMatrix,
    config: &TrainConfig,
    labels: Option<&LabelVector>,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<(EncoderParams, TrainMetrics)> {
    config.validate()?;
    let n = g.num_nodes();
    if x.num_nodes() != n {
        return Err(Error::Shape(format!("{} feature rows for {n} nodes", x.num_nodes())));
    }
    if let Some(y) = labels {
        if y.len() != n {
            return Err(Error::Shape(format!("{} labels for {n} nodes", y.len())));
        }
    }
    let mut params = init_params(config.encoder_shape(x.dim()), config.bn_enabled, config.seed)?;
    let shapes: Vec<(usize, usize)> = params.tensors().iter().map(|m| m.shape()).collect();
    let mut adam = Adam::new(config.lr, &shapes);
    let mut rng = rng_from_seed(crate::rng::derive_seed(config.seed, 1));
    let batch = config.batch.min(n);
    let mut cover = CoverTracker::new(n);
    let mut previous: Option<PositiveSet> = None;
    let mut metrics = TrainMetrics::default();

    for epoch in 0..config.epochs {
        let (emb, cache) = forward(&params, g, x, Mode::Train)?;
        let cache = cache.expect("train mode returns a cache");
        let (seeds, pool) = sample_pool(g, batch, config.hops, &mut rng)?;
        let pos = mine_positives(&emb.z, &seeds, &pool, config.k_pos)?;
        let neg = sample_negatives(&seeds, n, config.k_neg, &mut rng);
        let (loss, grad_z) = empirical_loss_and_grad(&emb.z, &pos, &neg)?;
        let dyn_rec = dynamics_metrics(&emb.z, &pos, previous.as_ref(), labels, &mut cover)?;
        let record = EpochMetrics {
            epoch,
            loss,
            node_cover_ratio: dyn_rec.node_cover_ratio,
            overlap_ratio: dyn_rec.overlap_ratio,
            class_center_distance: dyn_rec.class_center_distance,
            transformed_homophily: dyn_rec.transformed_homophily,
            true_positive_ratio: dyn_rec.true_positive_ratio,
            weight_norms: weight_norm_sums(&params),
        };
        let grads = backward(&params, &cache, &grad_z)?;
        params.update_running_stats(&cache)?;
        adam.step(&mut params.tensors_mut(), &grads.tensors())?;
        on_epoch(&record);
        metrics.epochs.push(record);
        previous = Some(pos);
    }
    Ok((params, metrics))
}

/// Eval-mode embeddings of trained parameters.
pub fn embed(params: &EncoderParams, g: &Graph, x: &FeatureMatrix) -> Result<crate::encoder::Embeddings> {
    Ok(forward(params, g, x, Mode::Eval)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    fn unit(angle_deg: f64) -> [f64; 2] {
        let a = angle_deg.to_radians();
        [a.cos(), a.sin()]
    }

    #[test]
    fn pools() {
        assert_eq!(hop_pool(&path(5), &[0], 2), vec![0, 1, 2]);
        assert_eq!(hop_pool(&Graph::empty(4), &[2], 1), vec![2]);
        assert_eq!(hop_pool(&path(6), &[3], 10), (0..6).collect::<Vec<_>>());
        let mut rng = rng_from_seed(0);
        assert!(sample_pool(&path(3), 4, 1, &mut rng).is_err());
        let (seeds, pool) = sample_pool(&path(8), 3, 1, &mut rng).unwrap();
        assert_eq!(seeds.len(), 3);
        assert!(seeds.iter().all(|s| pool.contains(s)));
    }

    #[test]
    fn mining_examples() {
        let z = Mat::from_rows(&[unit(0.0), unit(10.0), unit(90.0), unit(180.0)]).unwrap();
        let pos = mine_positives(&z, &[0], &[0, 1, 2, 3], 2).unwrap();
        let picked: Vec<usize> = pos.positives_of(0).iter().map(|p| p.0).collect();
        assert_eq!(picked, vec![1, 2]);

        let ortho = Mat::identity(5);
        let pos = mine_positives(&ortho, &[3], &[4, 0, 1, 2, 3], 2).unwrap();
        let picked: Vec<usize> = pos.positives_of(0).iter().map(|p| p.0).collect();
        assert_eq!(picked, vec![0, 1]);

        let err = mine_positives(&ortho, &[3], &[3, 4], 2).unwrap_err();
        assert!(err.to_string().contains("seed 3"));
    }

    #[test]
    fn transformed_graph_views() {
        let empty = PositiveSet::from_lists(4, vec![]).unwrap();
        assert!(build_transformed_graph(&empty, 4).unwrap().directed_edges().is_empty());
        let pos = PositiveSet::from_lists(2, vec![(0, vec![1]), (1, vec![0])]).unwrap();
        let tg = build_transformed_graph(&pos, 2).unwrap();
        assert_eq!(tg.undirected_edges(), &[(0, 1)]);
        assert_eq!(tg.regular_degree(), Some(1));
        assert!(PositiveSet::from_lists(2, vec![(0, vec![0])]).is_err());
    }

    #[test]
    fn empirical_loss_examples() {
        let pos = PositiveSet::from_lists(3, vec![(0, vec![1])]).unwrap();
        let neg = NegativePairs(vec![(0, 2), (1, 2), (2, 2)]);
        let (l, g) = empirical_loss_and_grad(&Mat::zeros(3, 2), &pos, &neg).unwrap();
        assert_eq!((l, g.max_abs()), (0.0, 0.0));
        let z = Mat::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (l, _) = empirical_loss_and_grad(&z, &pos, &neg).unwrap();
        assert!((l + 5.0 / 3.0).abs() < 1e-15);
        let neg0 = NegativePairs(vec![(0, 2)]);
        assert!((empirical_loss_and_grad(&z, &pos, &neg0).unwrap().0 + 2.0).abs() < 1e-15);
        let none = PositiveSet::from_lists(3, vec![]).unwrap();
        assert!(empirical_loss_and_grad(&z, &none, &neg).is_err());
    }

    #[test]
    fn exact_loss_examples() {
        let tg = TransformedGraph::from_pairs(2, [(0, 1), (1, 0)]).unwrap();
        let z = Mat::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!((exact_loss(&z, &tg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(exact_loss(&Mat::zeros(2, 2), &tg).unwrap(), 0.0);
        let tg5 = TransformedGraph::from_pairs(5, [(0, 3), (2, 4), (4, 1)]).unwrap();
        assert!((exact_loss(&Mat::identity(5), &tg5).unwrap() - 0.2).abs() < 1e-15);
        assert!(exact_loss(&z, &TransformedGraph::from_pairs(2, []).unwrap()).is_err());
    }

    #[test]
    fn adam_first_steps() {
        let mut p = Mat::from_rows(&[[1.0, -2.0]]).unwrap();
        let mut adam = Adam::new(0.01, &[(1, 2)]);
        adam.step(&mut [&mut p], &[&Mat::zeros(1, 2)]).unwrap();
        assert_eq!(p, Mat::from_rows(&[[1.0, -2.0]]).unwrap());

        let mut q = Mat::zeros(1, 3);
        let mut adam = Adam::new(0.01, &[(1, 3)]);
        let g = Mat::from_rows(&[[0.5, -3.0, 1e-3]]).unwrap();
        adam.step(&mut [&mut q], &[&g]).unwrap();
        for (v, gv) in q.as_slice().iter().zip(g.as_slice()) {
            let expected = -0.01 * gv / (gv.abs() + 1e-8);
            assert!((v - expected).abs() < 1e-15);
        }
        let nan = Mat::from_rows(&[[f64::NAN, 0.0, 0.0]]).unwrap();
        assert!(adam.step(&mut [&mut q], &[&nan]).is_err());
    }

    #[test]
    fn dynamics_examples() {
        let a = PositiveSet::from_lists(4, vec![(0, vec![1]), (2, vec![3])]).unwrap();
        let b = PositiveSet::from_lists(4, vec![(1, vec![2])]).unwrap();
        assert_eq!(overlap_ratio(&a, &a), 1.0);
        assert_eq!(overlap_ratio(&b, &a), 0.0);

        let z = Mat::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        let y = LabelVector::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(class_center_distance(&z, &y).unwrap().abs() < 1e-15);
        assert_eq!(true_positive_ratio(&a, &y), Some(1.0));
        assert_eq!(true_positive_ratio(&b, &y), Some(0.0));

        let mut cover = CoverTracker::new(4);
        let r1 = dynamics_metrics(&z, &b, None, Some(&y), &mut cover).unwrap();
        assert_eq!(r1.node_cover_ratio, 0.5);
        assert_eq!(r1.overlap_ratio, None);
        let r2 = dynamics_metrics(&z, &a, Some(&b), Some(&y), &mut cover).unwrap();
        assert_eq!(r2.node_cover_ratio, 1.0);
        assert_eq!(r2.transformed_homophily, Some(1.0));
    }

    #[test]
    fn zero_epochs_returns_init() {
        let g = path(6);
        let x = FeatureMatrix::new(Mat::from_fn(6, 3, |r, c| (r * c) as f64)).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            embed_dim: 4,
            ..TrainConfig::default()
        };
        let (p, m) = train(&g, &x, &cfg, None).unwrap();
        assert_eq!(p, init_params(cfg.encoder_shape(3), false, cfg.seed).unwrap());
        assert!(m.epochs.is_empty());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<TrainConfig>(r#"{"lr": 0.01, "bogus": 1}"#).is_err());
        let c: TrainConfig = serde_json::from_str(r#"{"k_pos": 3}"#).unwrap();
        assert_eq!((c.k_pos, c.k_neg), (3, 100));
        assert!(TrainConfig { k_neg: 0, ..c }.validate().is_err());
    }
}
