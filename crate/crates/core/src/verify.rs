//! Canned instances for the theory checks, shared by `spgcl verify`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::contrastive::{build_transformed_graph, embed, hop_pool, mine_positives, train, TrainConfig, TransformedGraph};
use crate::encoder::{init_params, EncoderShape};
use crate::error::{Error, Result};
use crate::graph::LabelVector;
use crate::numerics::Mat;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::synth::{generate_csbm, CsbmParams};
use crate::theory::{
    concentration_experiment, lemma1_check, mf_loss, mf_optimum, statement1_check, theorem2_gap, theorem3_bound,
    BoundInputs, BoundReport, ConcentrationConfig, Statement1Report, Theorem2Report,
};

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Circulant graph: node `i` points to `i ± s` for every offset `s`.
pub fn circulant(n: usize, offsets: &[usize]) -> Result<TransformedGraph> {
    TransformedGraph::from_pairs(
        n,
        (0..n).flat_map(|i| offsets.iter().flat_map(move |&s| [(i, (i + s) % n), (i, (i + n - s % n) % n)])),
    )
}

/// Complete graph without self-pairs.
pub fn complete(n: usize) -> Result<TransformedGraph> {
    TransformedGraph::from_pairs(n, (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Instance {
    pub name: String,
    pub n: usize,
    pub k_pos: usize,
    pub constant: f64,
    pub a_sym_frobenius_sq: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Suite {
    pub instances: Vec<Lemma1Instance>,
    pub max_residual: f64,
    pub pass: bool,
}

pub fn lemma1_suite(seed: u64, draws: usize) -> Result<Lemma1Suite> {
    let cases = [
        ("C12", circulant(12, &[1])?),
        ("C20", circulant(20, &[1])?),
        ("K6", complete(6)?),
        ("circulant16(1,3)", circulant(16, &[1, 3])?),
    ];
    let mut rng = rng_from_seed(seed);
    let mut instances = Vec::new();
    for (name, tg) in cases {
        let mut max_residual: f64 = 0.0;
        let mut last = None;
        for _ in 0..draws {
            let z = gaussian_matrix(tg.num_nodes(), 8, &mut rng);
            let rep = lemma1_check(&z, &tg)?;
            max_residual = max_residual.max(rep.residual);
            last = Some(rep);
        }
        let rep = last.ok_or_else(|| Error::Config("need at least one draw".into()))?;
        instances.push(Lemma1Instance {
            name: name.into(),
            n: tg.num_nodes(),
            k_pos: tg.regular_degree().expect("regular by construction"),
            constant: rep.constant,
            a_sym_frobenius_sq: rep.a_sym_frobenius_sq,
            max_residual,
        });
    }
    let max_residual = instances.iter().map(|i| i.max_residual).fold(0.0, f64::max);
    Ok(Lemma1Suite {
        instances,
        max_residual,
        pass: max_residual <= 1e-8,
    })
}

/// Default single-layer concentration setup: CSBM with `n = 200`, mean
/// degree about 20, eight features and an eight-column weight.
pub fn default_concentration(seed: u64) -> Result<ConcentrationConfig> {
    let csbm = CsbmParams::two_class(200, 0.15, 0.05, 1.0, 8, derive_seed(seed, 1));
    let w = init_params(EncoderShape::uniform(8, 8), false, derive_seed(seed, 2))?.w1;
    Ok(ConcentrationConfig {
        csbm,
        weight: (0..w.rows()).map(|r| w.row(r).to_vec()).collect(),
        deltas: vec![0.05, 0.1],
        delta_prime: 0.1,
        node_trials: 500,
        pair_trials: 500,
        inner: 2000,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Suite {
    pub deltas: Vec<f64>,
    pub node_violation_rates: Vec<f64>,
    pub delta_prime: f64,
    pub pair_violation_rate: f64,
    pub r: f64,
    pub mean_node_deviation: f64,
    pub mean_node_bound: Vec<f64>,
    pub statement1: Statement1Report,
    pub pass: bool,
}

pub fn theorem1_suite(seed: u64) -> Result<Theorem1Suite> {
    let cfg = default_concentration(seed)?;
    let rep = concentration_experiment(&cfg)?;
    let w = Mat::from_rows(&cfg.weight)?;
    let statement1 = statement1_check(&cfg.csbm, &w, cfg.inner, 8, derive_seed(seed, 3))?;
    let t = rep.node_trials.len().max(1) as f64;
    let mean_node_deviation = rep.node_trials.iter().map(|x| x.deviation).sum::<f64>() / t;
    let mean_node_bound = (0..rep.deltas.len())
        .map(|d| rep.node_trials.iter().map(|x| x.bounds[d]).sum::<f64>() / t)
        .collect();
    let pass = rep.node_violation_rates.iter().zip(&rep.deltas).all(|(r, d)| *r <= d + 0.05)
        && rep.pair_violation_rate <= rep.delta_prime + 0.05
        && statement1.ratio >= 1.8;
    Ok(Theorem1Suite {
        deltas: rep.deltas,
        node_violation_rates: rep.node_violation_rates,
        delta_prime: rep.delta_prime,
        pair_violation_rate: rep.pair_violation_rate,
        r: rep.r,
        mean_node_deviation,
        mean_node_bound,
        statement1,
        pass,
    })
}

/// Random disjoint cliques with self-loops on 8 to 14 nodes and random
/// binary labels. `Â_sym` is block diagonal with rank-one PSD blocks, so the
/// optimum with `K` = number of cliques factorises it exactly.
pub fn random_clique_instance(rng: &mut Rng) -> Result<(TransformedGraph, LabelVector, usize)> {
    let n = rng.random_range(8..=14);
    let mut pairs = Vec::new();
    let mut start = 0;
    let mut blocks = 0;
    while start < n {
        let size = rng.random_range(1..=4).min(n - start);
        for i in start..start + size {
            for j in start..start + size {
                pairs.push((i, j));
            }
        }
        start += size;
        blocks += 1;
    }
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    labels[0] = 0;
    labels[n - 1] = 1;
    Ok((TransformedGraph::from_pairs(n, pairs)?, LabelVector::new(labels, 2)?, blocks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Case {
    pub n: usize,
    pub k: usize,
    pub mf_loss: f64,
    pub report: Theorem2Report,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Suite {
    pub cases: Vec<Theorem2Case>,
    pub holds_count: usize,
    pub pass: bool,
}

pub fn theorem2_case(tg: &TransformedGraph, y: &LabelVector, k: usize) -> Result<Theorem2Case> {
    let f = mf_optimum(tg, k)?;
    let loss = mf_loss(&f, &tg.a_sym()?)?;
    let report = theorem2_gap(&f, tg, y)?;
    Ok(Theorem2Case {
        n: tg.num_nodes(),
        k,
        mf_loss: loss,
        holds: loss <= 1e-6 && report.gap >= report.one_minus_phi - 1e-6,
        report,
    })
}

pub fn theorem2_suite(seed: u64, count: usize) -> Result<Theorem2Suite> {
    let mut rng = rng_from_seed(seed);
    let cases = (0..count)
        .map(|_| {
            let (tg, y, k) = random_clique_instance(&mut rng)?;
            theorem2_case(&tg, &y, k)
        })
        .collect::<Result<Vec<_>>>()?;
    let holds_count = cases.iter().filter(|c| c.holds).count();
    Ok(Theorem2Suite {
        pass: holds_count == cases.len(),
        holds_count,
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Run {
    pub name: String,
    pub seed: u64,
    pub report: BoundReport,
    pub non_vacuous: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Suite {
    pub runs: Vec<Theorem3Run>,
    pub pass: bool,
}

/// Trains on a CSBM, mines positives for every node from its two-hop pool,
/// and evaluates the bound with the first-layer weight.
pub fn theorem3_run(name: &str, params: &CsbmParams, cfg: &TrainConfig, k: usize) -> Result<Theorem3Run> {
    let (g, x, y) = generate_csbm(params)?;
    let (enc, _) = train(&g, &x, cfg, None)?;
    let emb = embed(&enc, &g, &x)?;
    let seeds: Vec<usize> = (0..g.num_nodes()).collect();
    let pool = hop_pool(&g, &seeds, cfg.hops);
    let pos = mine_positives(&emb.z, &seeds, &pool, cfg.k_pos)?;
    let tg = build_transformed_graph(&pos, g.num_nodes())?;
    let report = theorem3_bound(&BoundInputs {
        tg: &tg,
        weight: &enc.w1,
        features: &x,
        graph: &g,
        labels: &y,
        delta_prime: 0.1,
        k,
    })?;
    let finite = [
        report.phi_bar,
        report.lambda_k1,
        report.c_degree,
        report.weight_norm_sum,
        report.r,
        report.bound,
        report.measured_error,
    ]
    .iter()
    .all(|v| v.is_finite() && *v >= 0.0);
    let non_vacuous = report.bound < 1.0;
    Ok(Theorem3Run {
        name: name.into(),
        seed: cfg.seed,
        holds: finite && (!non_vacuous || report.measured_error <= report.bound),
        non_vacuous,
        report,
    })
}

pub fn theorem3_suite(seed: u64, runs: usize) -> Result<Theorem3Suite> {
    let mut out = Vec::new();
    for r in 0..runs as u64 {
        let s = derive_seed(seed, r);
        for (name, p, q, bn) in [("homophilic", 0.1, 0.02, false), ("heterophilic", 0.02, 0.1, true)] {
            let params = CsbmParams::two_class(300, p, q, 1.0, 16, s);
            let cfg = TrainConfig {
                epochs: 30,
                bn_enabled: bn,
                seed: s,
                ..TrainConfig::default()
            };
            out.push(theorem3_run(name, &params, &cfg, 8)?);
        }
    }
    Ok(Theorem3Suite {
        pass: out.iter().all(|r| r.holds),
        runs: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_graphs_are_regular() {
        assert_eq!(circulant(12, &[1]).unwrap().regular_degree(), Some(2));
        assert_eq!(circulant(16, &[1, 3]).unwrap().regular_degree(), Some(4));
        assert_eq!(complete(6).unwrap().regular_degree(), Some(5));
    }

    #[test]
    fn clique_instances_factorise_exactly() {
        let mut rng = rng_from_seed(4);
        for _ in 0..5 {
            let (tg, _, k) = random_clique_instance(&mut rng).unwrap();
            let f = mf_optimum(&tg, k).unwrap();
            assert!(mf_loss(&f, &tg.a_sym().unwrap()).unwrap() < 1e-10);
        }
    }
}
