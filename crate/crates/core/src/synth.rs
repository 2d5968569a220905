//! Synthetic graphs whose neighbour labels depend only on the centre label.
//!
//! Random stream layout (fixed, so outputs are reproducible): one ChaCha8
//! stream per call, seeded with `seed`. The CSBM draws labels first (only
//! when priors are given), then one uniform per unordered pair `(i, j)`,
//! `i < j`, in lexicographic order, then features row-major. The
//! neighbour-distribution sampler draws labels, then for each node in order
//! its `d` neighbour labels and partners, then features.

use rand::seq::index;
use rand::Rng as _;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LabelVector};
use crate::numerics::Mat;
use crate::rng::{rng_from_seed, Rng};

/// Contextual stochastic block model: same-class pairs are linked with
/// probability `p`, cross-class pairs with `s`, features are `μ_y + ξ` with
/// `ξ ~ N(0, I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsbmParams {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    /// Class means, one row per class.
    pub mu: Vec<Vec<f64>>,
    /// Class priors; `None` assigns node `i` to class `i mod c`.
    #[serde(default)]
    pub priors: Option<Vec<f64>>,
    pub seed: u64,
}

impl CsbmParams {
    /// Canonical two-class model with means `∓μ`, `μ = (‖μ‖/√F)·1`. Class 1
    /// sits at `+μ`.
    pub fn two_class(n: usize, p: f64, s: f64, mu_norm: f64, feat_dim: usize, seed: u64) -> Self {
        let m = mu_norm / (feat_dim.max(1) as f64).sqrt();
        CsbmParams {
            n,
            p,
            s,
            mu: vec![vec![-m; feat_dim], vec![m; feat_dim]],
            priors: None,
            seed,
        }
    }

    /// `c` classes with means `mu_norm · e_{k mod F}`.
    pub fn axis_means(n: usize, num_classes: usize, p: f64, s: f64, mu_norm: f64, feat_dim: usize, seed: u64) -> Self {
        let mu = (0..num_classes)
            .map(|k| {
                let mut row = vec![0.0; feat_dim];
                if feat_dim > 0 {
                    row[k % feat_dim] = mu_norm;
                }
                row
            })
            .collect();
        CsbmParams {
            n,
            p,
            s,
            mu,
            priors: None,
            seed,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.mu.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.mu.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("csbm needs n >= 2, got {}", self.n)));
        }
        for (name, v) in [("p", self.p), ("s", self.s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("csbm {name} = {v} outside [0, 1]")));
            }
        }
        if self.num_classes() < 2 {
            return Err(Error::Config("csbm needs at least two classes".into()));
        }
        let f = self.feature_dim();
        if f == 0 || self.mu.iter().any(|r| r.len() != f || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::Config("csbm class means must be finite rows of equal length >= 1".into()));
        }
        if let Some(pr) = &self.priors {
            validate_distribution(pr, self.num_classes(), "class priors")?;
        }
        Ok(())
    }
}

fn validate_distribution(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len || row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::Config(format!("{what}: need {len} non-negative entries")));
    }
    if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{what}: entries must sum to 1")));
    }
    Ok(())
}

fn draw_labels(n: usize, c: usize, priors: Option<&[f64]>, rng: &mut Rng) -> Result<LabelVector> {
    let labels = match priors {
        None => (0..n).map(|i| i % c).collect(),
        Some(pr) => {
            let dist = WeightedIndex::new(pr).map_err(|e| Error::Config(e.to_string()))?;
            (0..n).map(|_| dist.sample(rng)).collect()
        }
    };
    LabelVector::new(labels, c)
}

/// `x_i = μ_{y_i} + ξ_i`, `ξ_i ~ N(0, I)`.
pub fn sample_features(mu: &[Vec<f64>], y: &LabelVector, rng: &mut Rng) -> FeatureMatrix {
    let f = mu.first().map_or(0, Vec::len);
    let mut x = Mat::zeros(y.len(), f);
    for i in 0..y.len() {
        let mean = &mu[y.get(i)];
        for (v, m) in x.row_mut(i).iter_mut().zip(mean) {
            let noise: f64 = StandardNormal.sample(rng);
            *v = m + noise;
        }
    }
    FeatureMatrix::new(x).expect("gaussian samples are finite")
}

pub fn generate_csbm(params: &CsbmParams) -> Result<(Graph, FeatureMatrix, LabelVector)> {
    params.validate()?;
    let mut rng = rng_from_seed(params.seed);
    let y = draw_labels(params.n, params.num_classes(), params.priors.as_deref(), &mut rng)?;
    let mut pairs = Vec::new();
    for i in 0..params.n {
        for j in i + 1..params.n {
            let prob = if y.get(i) == y.get(j) { params.p } else { params.s };
            let u: f64 = rng.random();
            if u < prob {
                pairs.push((i, j));
            }
        }
    }
    let g = Graph::from_edges(params.n, pairs)?;
    let x = sample_features(&params.mu, &y, &mut rng);
    Ok((g, x, y))
}

/// Every node draws `degree` neighbour labels from the row of
/// `neighbor_dist` for its own class and links to distinct nodes of those
/// classes; the directed picks are then collapsed to undirected edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborDistParams {
    pub n: usize,
    /// Row `y` is the neighbour-label distribution of class `y`.
    pub neighbor_dist: Vec<Vec<f64>>,
    pub degree: usize,
    pub mu: Vec<Vec<f64>>,
    #[serde(default)]
    pub priors: Option<Vec<f64>>,
    pub seed: u64,
}

impl NeighborDistParams {
    pub fn num_classes(&self) -> usize {
        self.neighbor_dist.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes();
        if c < 2 {
            return Err(Error::Config("neighbour distribution needs >= 2 classes".into()));
        }
        for (k, row) in self.neighbor_dist.iter().enumerate() {
            validate_distribution(row, c, &format!("neighbour distribution row {k}"))?;
        }
        if self.degree == 0 {
            return Err(Error::Config("degree must be >= 1".into()));
        }
        if self.mu.len() != c {
            return Err(Error::Config(format!("{} class means for {c} classes", self.mu.len())));
        }
        if let Some(pr) = &self.priors {
            validate_distribution(pr, c, "class priors")?;
        }
        Ok(())
    }
}

pub fn generate_neighbor_dist_graph(params: &NeighborDistParams) -> Result<(Graph, FeatureMatrix, LabelVector)> {
    params.validate()?;
    let c = params.num_classes();
    let mut rng = rng_from_seed(params.seed);
    let y = draw_labels(params.n, c, params.priors.as_deref(), &mut rng)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in y.as_slice().iter().enumerate() {
        members[l].push(i);
    }
    let dists = params
        .neighbor_dist
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = Vec::new();
    for v in 0..params.n {
        let mut wanted = vec![0usize; c];
        for _ in 0..params.degree {
            wanted[dists[y.get(v)].sample(&mut rng)] += 1;
        }
        for (class, &count) in wanted.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let pool: Vec<usize> = members[class].iter().copied().filter(|&u| u != v).collect();
            if pool.len() < count {
                return Err(Error::Graph(format!(
                    "node {v} needs {count} distinct neighbours of class {class}, only {} available",
                    pool.len()
                )));
            }
            for k in index::sample(&mut rng, pool.len(), count) {
                pairs.push((v, pool[k]));
            }
        }
    }
    let g = Graph::from_edges(params.n, pairs)?;
    let x = sample_features(&params.mu, &y, &mut rng);
    Ok((g, x, y))
}
