//! Linear-probe evaluation of frozen embeddings.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::contrastive::Adam;
use crate::error::{Error, Result};
use crate::graph::LabelVector;
use crate::numerics::Mat;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` and cuts it into `⌊f·n⌋`-sized train, validation and test
/// parts.
pub fn random_split(n: usize, fractions: [f64; 3], seed: u64) -> Result<Split> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::Config(format!("invalid split fractions {fractions:?}")));
    }
    let size = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let (a, b, c) = (size(fractions[0]), size(fractions[1]), size(fractions[2]));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    Ok(Split {
        train: order[..a].to_vec(),
        val: order[a..a + b].to_vec(),
        test: order[a + b..(a + b + c).min(n)].to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub repeats: usize,
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            epochs: 1000,
            lr: 5e-4,
            repeats: 10,
            fractions: [0.1, 0.1, 0.8],
            seed: 0,
        }
    }
}

/// Softmax-regression weights, last row is the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub weights: Mat,
}

impl Probe {
    pub fn logits(&self, h: &Mat, rows: &[usize]) -> Mat {
        let k = h.cols();
        let c = self.weights.cols();
        Mat::from_fn(rows.len(), c, |r, j| {
            let x = h.row(rows[r]);
            self.weights[(k, j)] + (0..k).map(|i| x[i] * self.weights[(i, j)]).sum::<f64>()
        })
    }

    pub fn predict(&self, h: &Mat, rows: &[usize]) -> Vec<usize> {
        let l = self.logits(h, rows);
        (0..rows.len())
            .map(|r| {
                let row = l.row(r);
                (0..row.len()).fold(0, |best, j| if row[j] > row[best] { j } else { best })
            })
            .collect()
    }

    pub fn accuracy(&self, h: &Mat, y: &LabelVector, rows: &[usize]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let hits = self.predict(h, rows).iter().zip(rows).filter(|(p, &r)| **p == y.get(r)).count();
        hits as f64 / rows.len() as f64
    }

    /// Softmax probability of class 1.
    pub fn positive_scores(&self, h: &Mat, rows: &[usize]) -> Vec<f64> {
        softmax_rows(&self.logits(h, rows)).column(1)
    }
}

fn softmax_rows(l: &Mat) -> Mat {
    let mut p = l.clone();
    for r in 0..p.rows() {
        let row = p.row_mut(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRun {
    pub probe: Probe,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub test_auc: Option<f64>,
    pub best_epoch: usize,
}

/// Trains a softmax probe on `split.train`, keeping the weights with the best
/// validation accuracy (earliest on ties).
pub fn train_probe(h: &Mat, y: &LabelVector, split: &Split, epochs: usize, lr: f64) -> Result<ProbeRun> {
    if h.rows() != y.len() {
        return Err(Error::Shape(format!("{} embedding rows for {} labels", h.rows(), y.len())));
    }
    if !h.is_finite() {
        return Err(Error::Numeric("non-finite embeddings".into()));
    }
    let c = y.num_classes();
    let mut present = vec![false; c];
    split.train.iter().for_each(|&i| present[y.get(i)] = true);
    if let Some(missing) = present.iter().position(|&p| !p) {
        return Err(Error::Config(format!("class {missing} missing from the training split")));
    }
    let k = h.cols();
    let mut probe = Probe {
        weights: Mat::zeros(k + 1, c),
    };
    let mut adam = Adam::new(lr, &[(k + 1, c)]);
    let val_rows = if split.val.is_empty() { &split.train } else { &split.val };
    let mut best = (probe.clone(), probe.accuracy(h, y, val_rows), 0);
    let nt = split.train.len() as f64;
    for epoch in 1..=epochs {
        let mut p = softmax_rows(&probe.logits(h, &split.train));
        for (r, &i) in split.train.iter().enumerate() {
            p[(r, y.get(i))] -= 1.0;
        }
        let mut grad = Mat::zeros(k + 1, c);
        for (r, &i) in split.train.iter().enumerate() {
            let x = h.row(i);
            for j in 0..c {
                let d = p[(r, j)] / nt;
                for (f, &xv) in x.iter().enumerate() {
                    grad[(f, j)] += xv * d;
                }
                grad[(k, j)] += d;
            }
        }
        adam.step(&mut [&mut probe.weights], &[&grad])?;
        let acc = probe.accuracy(h, y, val_rows);
        if acc > best.1 {
            best = (probe.clone(), acc, epoch);
        }
    }
    let (probe, val_accuracy, best_epoch) = best;
    let test_auc = if c == 2 {
        let labels: Vec<bool> = split.test.iter().map(|&i| y.get(i) == 1).collect();
        roc_auc(&probe.positive_scores(h, &split.test), &labels).ok()
    } else {
        None
    };
    Ok(ProbeRun {
        train_accuracy: probe.accuracy(h, y, &split.train),
        test_accuracy: probe.accuracy(h, y, &split.test),
        val_accuracy,
        test_auc,
        best_epoch,
        probe,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub aucs: Option<Vec<f64>>,
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Probe accuracy over `cfg.repeats` fresh splits.
pub fn linear_probe(h: &Mat, y: &LabelVector, cfg: &ProbeConfig) -> Result<ProbeResult> {
    if cfg.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let mut accs = Vec::with_capacity(cfg.repeats);
    let mut aucs = Vec::new();
    for r in 0..cfg.repeats {
        let split = random_split(h.rows(), cfg.fractions, derive_seed(cfg.seed, r as u64))?;
        let run = train_probe(h, y, &split, cfg.epochs, cfg.lr)?;
        accs.push(run.test_accuracy);
        if let Some(a) = run.test_auc {
            aucs.push(a);
        }
    }
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    let auc_stats = (aucs.len() == accs.len()).then(|| mean_std(&aucs));
    Ok(ProbeResult {
        accuracies: accs,
        mean_accuracy,
        std_accuracy,
        aucs: auc_stats.map(|_| aucs),
        mean_auc: auc_stats.map(|s| s.0),
        std_auc: auc_stats.map(|s| s.1),
    })
}

/// Probability that a random positive scores above a random negative, ties
/// counting one half. Computed from average ranks.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Config("roc_auc needs both classes".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * avg;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let s = random_split(10, [0.1, 0.1, 0.8], 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1, 1, 8));
        assert_eq!(s, random_split(10, [0.1, 0.1, 0.8], 3).unwrap());
        assert_ne!(random_split(200, [0.1, 0.1, 0.8], 1).unwrap().test, random_split(200, [0.1, 0.1, 0.8], 2).unwrap().test);
        assert!(random_split(10, [0.5, 0.5, 0.5], 0).is_err());
    }

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.3, 0.4], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.4, 0.3, 0.2, 0.1], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn separated_clusters_are_learned() {
        let n = 40;
        let h = Mat::from_fn(n, 2, |r, c| if (r % 2 == 0) == (c == 0) { 1.0 } else { 0.0 });
        let y = LabelVector::new((0..n).map(|i| i % 2).collect(), 2).unwrap();
        let res = linear_probe(&h, &y, &ProbeConfig { repeats: 3, fractions: [0.2, 0.2, 0.6], ..Default::default() }).unwrap();
        assert_eq!(res.mean_accuracy, 1.0);
        assert_eq!(res.mean_auc, Some(1.0));
    }

    #[test]
    fn missing_class_errors() {
        let h = Mat::zeros(4, 1);
        let y = LabelVector::new(vec![0, 0, 0, 1], 2).unwrap();
        let split = Split {
            train: vec![0, 1],
            val: vec![2],
            test: vec![3],
        };
        assert!(train_probe(&h, &y, &split, 5, 1e-3).is_err());
    }
}
