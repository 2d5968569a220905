//! Numeric checks of the method's theory: the matrix-factorisation view of
//! the loss, concentration of aggregated features, the label-separation gap
//! at the optimum, and the downstream error bound.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::contrastive::{exact_loss, TransformedGraph};
use crate::encoder::{forward_theory, weight_norm_sum};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, LabelVector};
use crate::numerics::{dot, least_squares, Mat};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::synth::{generate_csbm, sample_features, CsbmParams};

/// `‖A − F Fᵀ‖²_F`.
pub fn mf_loss(f: &Mat, a_sym: &Mat) -> Result<f64> {
    if !a_sym.is_square() || f.rows() != a_sym.rows() {
        return Err(Error::Shape(format!(
            "factor {:?} against target {:?}",
            f.shape(),
            a_sym.shape()
        )));
    }
    Ok(a_sym.sub(&f.matmul_t(f)?)?.frobenius_sq())
}

/// Best rank-`k` factor: `u_i·√max(0, 1 − λ̂_i)` for the `k` smallest
/// Laplacian eigenvalues.
pub fn mf_optimum(tg: &TransformedGraph, k: usize) -> Result<Mat> {
    let n = tg.num_nodes();
    if k == 0 || k > n {
        return Err(Error::Config(format!("rank {k} outside 1..={n}")));
    }
    let eig = tg.eig()?;
    Ok(Mat::from_fn(n, k, |r, c| {
        eig.vectors[(r, c)] * (1.0 - eig.values[c]).max(0.0).sqrt()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub mf_loss: f64,
    pub exact_loss: f64,
    /// `N / K_pos`.
    pub constant: f64,
    pub a_sym_frobenius_sq: f64,
    pub residual: f64,
}

/// `|mf_loss(Z/√N, Â_sym) − exact_loss(Z) − N/K_pos|` on a regular
/// transformed graph.
pub fn lemma1_check(z: &Mat, tg: &TransformedGraph) -> Result<Lemma1Report> {
    let Some(d) = tg.regular_degree() else {
        return Err(Error::Graph("regularity required".into()));
    };
    let n = tg.num_nodes() as f64;
    let a = tg.a_sym()?;
    let mf = mf_loss(&z.scale(1.0 / n.sqrt()), &a)?;
    let exact = exact_loss(z, tg)?;
    let constant = n / d as f64;
    Ok(Lemma1Report {
        mf_loss: mf,
        exact_loss: exact,
        constant,
        a_sym_frobenius_sq: a.frobenius_sq(),
        residual: (mf - exact - constant).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub csbm: CsbmParams,
    /// Single-layer weight, `F × K`.
    pub weight: Vec<Vec<f64>>,
    pub deltas: Vec<f64>,
    pub delta_prime: f64,
    pub node_trials: usize,
    pub pair_trials: usize,
    /// Feature resamples used to estimate expectations.
    pub inner: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeTrial {
    pub node: usize,
    /// Degree including the self-loop.
    pub degree: usize,
    /// `‖E[z_i] − z_i‖_∞`.
    pub deviation: f64,
    /// Bound for each configured δ.
    pub bounds: Vec<f64>,
    pub violated: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTrial {
    pub i: usize,
    pub j: usize,
    pub deviation: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub deltas: Vec<f64>,
    pub delta_prime: f64,
    /// Largest feature norm over every sample drawn.
    pub r: f64,
    pub max_weight_norm: f64,
    pub weight_norm_sum: f64,
    pub node_trials: Vec<NodeTrial>,
    pub pair_trials: Vec<PairTrial>,
    /// Violation rate for each δ.
    pub node_violation_rates: Vec<f64>,
    pub pair_violation_rate: f64,
}

fn weight_matrix(rows: &[Vec<f64>]) -> Result<Mat> {
    Mat::from_rows(rows).map_err(|e| Error::Config(format!("weight: {e}")))
}

fn validate_probability(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Config(format!("{name} = {v} outside (0, 1)")));
    }
    Ok(())
}

/// Holds the graph fixed, resamples features, and compares observed
/// deviations of single-layer embeddings with their Hoeffding-type bounds.
pub fn concentration_experiment(cfg: &ConcentrationConfig) -> Result<ConcentrationReport> {
    cfg.deltas.iter().try_for_each(|&d| validate_probability(d, "delta"))?;
    validate_probability(cfg.delta_prime, "delta'")?;
    if cfg.inner < 2 {
        return Err(Error::Config("need at least two inner resamples".into()));
    }
    let w = weight_matrix(&cfg.weight)?;
    let (g, _, y) = generate_csbm(&cfg.csbm)?;
    let n = g.num_nodes();
    let k = w.cols();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 11));
    let mut r: f64 = 0.0;
    let draw = |rng: &mut Rng, r: &mut f64| -> Result<Mat> {
        let x = sample_features(&cfg.csbm.mu, &y, rng);
        *r = r.max(x.max_row_norm());
        forward_theory(&w, &g, &x)
    };

    let nodes: Vec<usize> = (0..cfg.node_trials).map(|_| rng.random_range(0..n)).collect();
    let pairs: Vec<(usize, usize)> = (0..cfg.pair_trials)
        .map(|_| {
            let s = index::sample(&mut rng, n, 2);
            (s.index(0), s.index(1))
        })
        .collect();

    let mut mean_z = Mat::zeros(n, k);
    let mut mean_ip = vec![0.0; pairs.len()];
    for _ in 0..cfg.inner {
        let z = draw(&mut rng, &mut r)?;
        mean_z.axpy(1.0 / cfg.inner as f64, &z)?;
        for (m, &(i, j)) in mean_ip.iter_mut().zip(&pairs) {
            *m += dot(z.row(i), z.row(j)) / cfg.inner as f64;
        }
    }

    let mut node_dev = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        let z = draw(&mut rng, &mut r)?;
        let dev = z.row(i).iter().zip(mean_z.row(i)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        node_dev.push(dev);
    }
    let mut pair_dev = Vec::with_capacity(pairs.len());
    for (m, &(i, j)) in mean_ip.iter().zip(&pairs) {
        let z = draw(&mut rng, &mut r)?;
        pair_dev.push((m - dot(z.row(i), z.row(j))).abs());
    }

    let max_w = (0..k).map(|c| w.column(c).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let sum_w = weight_norm_sum(&w);
    let dii = |v: usize| (g.degree(v) + 1) as f64;

    let node_trials: Vec<NodeTrial> = nodes
        .iter()
        .zip(&node_dev)
        .map(|(&i, &dev)| {
            let bounds: Vec<f64> = cfg
                .deltas
                .iter()
                .map(|&d| r * max_w * (2.0 * (2.0 * k as f64 / d).ln() / dii(i)).sqrt())
                .collect();
            let violated = bounds.iter().map(|&b| dev > b).collect();
            NodeTrial {
                node: i,
                degree: g.degree(i) + 1,
                deviation: dev,
                bounds,
                violated,
            }
        })
        .collect();
    let pair_trials: Vec<PairTrial> = pairs
        .iter()
        .zip(&pair_dev)
        .map(|(&(i, j), &dev)| {
            let bound = r * r * sum_w * (2.0 * (2.0 / cfg.delta_prime).ln() / (dii(i) * dii(j))).sqrt();
            PairTrial {
                i,
                j,
                deviation: dev,
                bound,
                violated: dev > bound,
            }
        })
        .collect();

    let rate = |count: usize, total: usize| if total == 0 { 0.0 } else { count as f64 / total as f64 };
    let node_violation_rates = (0..cfg.deltas.len())
        .map(|d| rate(node_trials.iter().filter(|t| t.violated[d]).count(), node_trials.len()))
        .collect();
    let pair_violation_rate = rate(pair_trials.iter().filter(|t| t.violated).count(), pair_trials.len());
    Ok(ConcentrationReport {
        deltas: cfg.deltas.clone(),
        delta_prime: cfg.delta_prime,
        r,
        max_weight_norm: max_w,
        weight_norm_sum: sum_w,
        node_trials,
        pair_trials,
        node_violation_rates,
        pair_violation_rate,
    })
}

/// Nodes whose aggregated features share one distribution given the graph:
/// same label, same degree and same neighbour label counts.
pub fn exchangeable_groups(g: &Graph, y: &LabelVector) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for v in 0..g.num_nodes() {
        let mut counts = vec![0usize; y.num_classes()];
        for &u in g.neighbors(v) {
            counts[y.get(u)] += 1;
        }
        groups.entry((y.get(v), counts)).or_default().push(v);
    }
    groups.into_values().filter(|m| m.len() >= 2).collect()
}

/// Mean over exchangeable same-label pairs of `‖Ê[z_i] − Ê[z_i′]‖_∞`, with
/// expectations estimated from `budget` feature resamples on a fixed graph.
pub fn same_label_gap(g: &Graph, y: &LabelVector, mu: &[Vec<f64>], w: &Mat, budget: usize, rng: &mut Rng) -> Result<f64> {
    let groups = exchangeable_groups(g, y);
    if groups.is_empty() {
        return Err(Error::Graph("no exchangeable same-label pair".into()));
    }
    let mut mean = Mat::zeros(g.num_nodes(), w.cols());
    for _ in 0..budget {
        let x = sample_features(mu, y, rng);
        mean.axpy(1.0 / budget as f64, &forward_theory(w, g, &x)?)?;
    }
    let (mut total, mut count) = (0.0, 0usize);
    for members in &groups {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = mean.row(i).iter().zip(mean.row(j)).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                total += d;
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement1Report {
    pub budgets: [usize; 2],
    pub gaps: [f64; 2],
    pub ratio: f64,
    pub pairs: usize,
}

/// Same-label gap at budgets `m` and `4m` on several CSBM draws; the gap
/// should shrink by about half.
pub fn statement1_check(csbm: &CsbmParams, w: &Mat, m: usize, graphs: usize, seed: u64) -> Result<Statement1Report> {
    if m == 0 || graphs == 0 {
        return Err(Error::Config("budget and graph count must be >= 1".into()));
    }
    let mut gaps = [0.0; 2];
    let mut pairs = 0;
    for r in 0..graphs {
        let params = CsbmParams {
            seed: derive_seed(seed, 100 + r as u64),
            ..csbm.clone()
        };
        let (g, _, y) = generate_csbm(&params)?;
        pairs += exchangeable_groups(&g, &y).iter().map(|m| m.len() * (m.len() - 1) / 2).sum::<usize>();
        for (b, budget) in [m, 4 * m].into_iter().enumerate() {
            let mut rng = rng_from_seed(derive_seed(seed, 200 + 2 * r as u64 + b as u64));
            gaps[b] += same_label_gap(&g, &y, &csbm.mu, w, budget, &mut rng)? / graphs as f64;
        }
    }
    Ok(Statement1Report {
        budgets: [m, 4 * m],
        gaps,
        ratio: gaps[0] / gaps[1],
        pairs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    /// `(1/N) Σ_{i,j} s_ij z_iᵀz_j`, `s_ij = +1` for equal labels and −1
    /// otherwise, all ordered pairs including `i = j`.
    pub gap: f64,
    /// Mean same-label inner product minus mean different-label one.
    pub gap_pair_means: f64,
    pub phi_bar: f64,
    pub one_minus_phi: f64,
}

pub fn theorem2_gap(z: &Mat, tg: &TransformedGraph, y: &LabelVector) -> Result<Theorem2Report> {
    let n = z.rows();
    if y.len() != n || tg.num_nodes() != n {
        return Err(Error::Shape(format!(
            "{n} rows, {} labels, {} graph nodes",
            y.len(),
            tg.num_nodes()
        )));
    }
    let gram = z.matmul_t(z)?;
    let (mut same, mut diff, mut n_same, mut n_diff) = (0.0, 0.0, 0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            if y.get(i) == y.get(j) {
                same += gram[(i, j)];
                n_same += 1;
            } else {
                diff += gram[(i, j)];
                n_diff += 1;
            }
        }
    }
    if n_diff == 0 {
        return Err(Error::Config("single class: different-label mean undefined".into()));
    }
    let phi_bar = 1.0 - tg.edge_homophily(y)?;
    Ok(Theorem2Report {
        gap: (same - diff) / n as f64,
        gap_pair_means: same / n_same as f64 - diff / n_diff as f64,
        phi_bar,
        one_minus_phi: 1.0 - phi_bar,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub phi_bar: f64,
    pub lambda_k1: f64,
    /// Mean of `1/D_ii` over the original graph, self-loops included.
    pub c_degree: f64,
    pub weight_norm_sum: f64,
    pub r: f64,
    pub delta_prime: f64,
    pub first_term: f64,
    pub second_term: f64,
    pub bound: f64,
    /// Mean squared error of the least-squares map from the optimal factor
    /// to one-hot labels.
    pub measured_error: f64,
}

pub struct BoundInputs<'a> {
    pub tg: &'a TransformedGraph,
    /// First-layer weight.
    pub weight: &'a Mat,
    pub features: &'a FeatureMatrix,
    pub graph: &'a Graph,
    pub labels: &'a LabelVector,
    pub delta_prime: f64,
    pub k: usize,
}

pub fn theorem3_bound(inp: &BoundInputs<'_>) -> Result<BoundReport> {
    validate_probability(inp.delta_prime, "delta'")?;
    let n = inp.tg.num_nodes();
    if inp.k + 1 > n {
        return Err(Error::Config(format!("K + 1 = {} exceeds {n} nodes", inp.k + 1)));
    }
    if inp.graph.num_nodes() != n || inp.labels.len() != n || inp.features.num_nodes() != n {
        return Err(Error::Shape("graph, labels, features and transformed graph disagree".into()));
    }
    let eig = inp.tg.eig()?;
    let lambda = eig.values[inp.k];
    if lambda <= 1e-12 {
        return Err(Error::Numeric(format!("vacuous bound: lambda_(K+1) = {lambda:e}")));
    }
    let phi_bar = 1.0 - inp.tg.edge_homophily(inp.labels)?;
    let c_degree = (0..n).map(|v| 1.0 / (inp.graph.degree(v) + 1) as f64).sum::<f64>() / n as f64;
    let wsum = weight_norm_sum(inp.weight);
    let r = inp.features.max_row_norm();
    let first_term = phi_bar / lambda;
    let second_term = r * r * c_degree * (2.0 * (2.0 / inp.delta_prime).ln() / (lambda * lambda)).sqrt() * wsum;

    let f = mf_optimum(inp.tg, inp.k)?;
    let targets = inp.labels.one_hot();
    let b = least_squares(&f, &targets)?;
    let measured_error = targets.sub(&f.matmul(&b)?)?.frobenius_sq() / n as f64;
    Ok(BoundReport {
        phi_bar,
        lambda_k1: lambda,
        c_degree,
        weight_norm_sum: wsum,
        r,
        delta_prime: inp.delta_prime,
        first_term,
        second_term,
        bound: first_term + second_term,
        measured_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::symmetric_eig;

    fn cycle(n: usize) -> TransformedGraph {
        TransformedGraph::from_pairs(n, (0..n).flat_map(|i| [(i, (i + 1) % n), ((i + 1) % n, i)])).unwrap()
    }

    #[test]
    fn mf_loss_examples() {
        let a = Mat::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.25 });
        assert!((mf_loss(&Mat::zeros(3, 2), &a).unwrap() - a.frobenius_sq()).abs() < 1e-15);
        let v = Mat::from_rows(&[[1.0], [2.0], [-1.0]]).unwrap();
        assert_eq!(mf_loss(&v, &v.matmul_t(&v).unwrap()).unwrap(), 0.0);
        assert!(mf_loss(&Mat::zeros(2, 1), &a).is_err());
    }

    #[test]
    fn lemma1_on_a_cycle() {
        let tg = cycle(12);
        let rep = lemma1_check(&Mat::zeros(12, 3), &tg).unwrap();
        assert!(rep.residual < 1e-12);
        assert!((rep.a_sym_frobenius_sq - 6.0).abs() < 1e-12);
        let path = TransformedGraph::from_pairs(3, [(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap();
        assert!(lemma1_check(&Mat::zeros(3, 2), &path).unwrap_err().to_string().contains("regularity required"));
    }

    #[test]
    fn full_rank_optimum_is_exact() {
        let tg = TransformedGraph::from_pairs(4, [(0, 0), (0, 1), (1, 1), (2, 2), (2, 3), (3, 3)]).unwrap();
        let f = mf_optimum(&tg, 4).unwrap();
        assert!(mf_loss(&f, &tg.a_sym().unwrap()).unwrap() < 1e-12);
        assert!(mf_optimum(&tg, 0).is_err());
    }

    #[test]
    fn gap_equals_one_minus_dirichlet_energy() {
        // Exact factorisation of a PSD Â_sym: gap = 1 − yᵀL̂y / N for ±1 labels.
        let pairs = [(0, 0), (0, 1), (1, 1), (2, 2), (2, 3), (3, 3), (3, 4), (2, 4), (4, 4)];
        let tg = TransformedGraph::from_pairs(5, pairs).unwrap();
        let a = tg.a_sym().unwrap();
        assert!(symmetric_eig(&a).unwrap().values[0] > -1e-12);
        let f = mf_optimum(&tg, 5).unwrap();
        let y = LabelVector::new(vec![0, 1, 0, 0, 1], 2).unwrap();
        let s: Vec<f64> = y.as_slice().iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
        let l = tg.laplacian().unwrap();
        let energy: f64 = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).map(|(i, j)| s[i] * l[(i, j)] * s[j]).sum();
        let rep = theorem2_gap(&f, &tg, &y).unwrap();
        assert!((rep.gap - (1.0 - energy / 5.0)).abs() < 1e-10);
    }

    #[test]
    fn two_cliques_gap() {
        let m = 3;
        let pairs = (0..2 * m).flat_map(|i| (0..2 * m).filter(move |&j| i / m == j / m).map(move |j| (i, j)));
        let tg = TransformedGraph::from_pairs(2 * m, pairs).unwrap();
        let y = LabelVector::new((0..2 * m).map(|i| i / m).collect(), 2).unwrap();
        let f = mf_optimum(&tg, 2).unwrap();
        assert!(mf_loss(&f, &tg.a_sym().unwrap()).unwrap() < 1e-10);
        let rep = theorem2_gap(&f, &tg, &y).unwrap();
        assert_eq!(rep.phi_bar, 0.0);
        assert!((rep.gap - 1.0).abs() < 1e-10);
        let one = LabelVector::new(vec![0; 2 * m], 2).unwrap();
        assert!(theorem2_gap(&f, &tg, &one).is_err());
    }

    #[test]
    fn bound_vanishes_on_aligned_graph() {
        let m = 4;
        let pairs = (0..2 * m).flat_map(|i| (0..2 * m).filter(move |&j| i != j && i / m == j / m).map(move |j| (i, j)));
        let tg = TransformedGraph::from_pairs(2 * m, pairs).unwrap();
        let y = LabelVector::new((0..2 * m).map(|i| i / m).collect(), 2).unwrap();
        let x = FeatureMatrix::new(Mat::from_fn(2 * m, 2, |r, c| (r + c) as f64)).unwrap();
        let g = Graph::from_edges(2 * m, [(0, 1)]).unwrap();
        let w = Mat::zeros(2, 3);
        let mut inp = BoundInputs {
            tg: &tg,
            weight: &w,
            features: &x,
            graph: &g,
            labels: &y,
            delta_prime: 0.1,
            k: 2,
        };
        let rep = theorem3_bound(&inp).unwrap();
        assert_eq!(rep.bound, 0.0);
        assert!(rep.measured_error < 1e-10);
        let w1 = Mat::identity(2);
        inp.weight = &w1;
        let loose = theorem3_bound(&inp).unwrap().second_term;
        inp.delta_prime = 0.5;
        assert!(theorem3_bound(&inp).unwrap().second_term < loose);
        inp.k = 1;
        assert!(theorem3_bound(&inp).unwrap_err().to_string().contains("vacuous"));
    }
}
