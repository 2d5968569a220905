use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use spgcl::eval::{linear_probe, random_split, roc_auc, train_probe, ProbeConfig};
use spgcl::graph::LabelVector;
use spgcl::numerics::Mat;
use spgcl::rng::rng_from_seed;

/// Standard normal CDF by Simpson integration of the density.
fn phi(x: f64) -> f64 {
    let steps = 10_000;
    let h = x.abs() / steps as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(x.abs());
    for i in 1..steps {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + x.signum() * s * h / 3.0
}

fn two_gaussians(n: usize, m: f64, seed: u64) -> (Mat, LabelVector) {
    let mut rng = rng_from_seed(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let x = Mat::from_fn(n, 1, |i, _| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        if labels[i] == 1 { m + noise } else { -m + noise }
    });
    (x, LabelVector::new(labels, 2).unwrap())
}

#[test]
fn posterior_auc_matches_closed_form() {
    let m = 0.5;
    let (x, y) = two_gaussians(4000, m, 1);
    let posterior: Vec<f64> = (0..x.rows()).map(|i| 1.0 / (1.0 + (-2.0 * m * x[(i, 0)]).exp())).collect();
    let labels: Vec<bool> = y.as_slice().iter().map(|&c| c == 1).collect();
    let want = phi(std::f64::consts::SQRT_2 * m);
    assert!((roc_auc(&posterior, &labels).unwrap() - want).abs() < 0.03);

    let split = random_split(x.rows(), [0.1, 0.1, 0.8], 2).unwrap();
    let run = train_probe(&x, &y, &split, 500, 0.01).unwrap();
    assert!((run.test_auc.unwrap() - want).abs() < 0.03);
    assert!((run.test_accuracy - phi(m)).abs() < 0.03);
}

#[test]
fn random_labels_give_chance_accuracy() {
    let mut rng = rng_from_seed(4);
    let h = Mat::from_fn(400, 8, |_, _| StandardNormal.sample(&mut rng));
    let y = LabelVector::new((0..400).map(|_| rng.random_range(0..2)).collect(), 2).unwrap();
    let res = linear_probe(&h, &y, &ProbeConfig { repeats: 3, epochs: 300, ..ProbeConfig::default() }).unwrap();
    assert!((res.mean_accuracy - 0.5).abs() <= 0.1, "{}", res.mean_accuracy);
}

#[test]
fn probe_is_seed_deterministic() {
    let (x, y) = two_gaussians(200, 1.0, 3);
    let cfg = ProbeConfig { repeats: 2, epochs: 100, seed: 9, ..ProbeConfig::default() };
    assert_eq!(linear_probe(&x, &y, &cfg).unwrap(), linear_probe(&x, &y, &cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auc_matches_pair_counting(scores in prop::collection::vec(0u8..6, 2..40), flips in prop::collection::vec(any::<bool>(), 40)) {
        let labels: Vec<bool> = flips[..scores.len()].to_vec();
        let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
        let n_pos = labels.iter().filter(|&&l| l).count();
        let res = roc_auc(&s, &labels);
        if n_pos == 0 || n_pos == labels.len() {
            prop_assert!(res.is_err());
            return Ok(());
        }
        let mut wins = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if labels[i] && !labels[j] {
                    wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let want = wins / (n_pos * (labels.len() - n_pos)) as f64;
        let auc = res.unwrap();
        prop_assert!((auc - want).abs() < 1e-12);
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((roc_auc(&neg, &labels).unwrap() - (1.0 - auc)).abs() < 1e-12);
    }

    #[test]
    fn splits_are_disjoint(n in 0usize..300, seed in any::<u64>()) {
        let s = random_split(n, [0.1, 0.1, 0.8], seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        let len = all.len();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), len);
        prop_assert!(all.iter().all(|&i| i < n));
        prop_assert_eq!(s.train.len(), (0.1 * n as f64 + 1e-9).floor() as usize);
    }
}
