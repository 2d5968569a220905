use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use spgcl::augment::{add_edges, drop_edges, mask_attributes, mask_attributes_with, ppr_diffusion, MaskMode};
use spgcl::graph::{normalized_adjacency, sym_laplacian, FeatureMatrix, Graph, NormMode};
use spgcl::numerics::{symmetric_eig, Mat};
use spgcl::rng::{rng_from_seed, Rng};
use spgcl::spectral::{band_decompose, band_distances, band_ranges, feature_band_split, LaplacianSource};

fn random_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Graph::from_edges(n, pairs.into_iter().filter(|_| rng.random_bool(p))).unwrap()
}

#[test]
fn ppr_spectrum_follows_the_resolvent_map() {
    for seed in 0..5 {
        let mut rng = rng_from_seed(seed);
        let g = random_graph(15, 0.25, &mut rng);
        let alpha = [0.05, 0.15, 0.5, 0.9, 1.0][seed as usize];
        let s = ppr_diffusion(&g, alpha).unwrap();
        let nu = symmetric_eig(&normalized_adjacency(&g, NormMode::SymSelfLoop).unwrap()).unwrap().values;
        let mut want: Vec<f64> = nu.iter().map(|v| alpha / (1.0 - (1.0 - alpha) * v)).collect();
        want.sort_by(f64::total_cmp);
        let got = symmetric_eig(&s).unwrap().values;
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "alpha {alpha}: {a} vs {b}");
        }
    }
}

#[test]
fn ppr_distance_is_reported_per_band() {
    let mut rng = rng_from_seed(3);
    let g = random_graph(20, 0.3, &mut rng);
    let s = ppr_diffusion(&g, 0.2).unwrap();
    let d = band_distances(LaplacianSource::Graph(&g), LaplacianSource::Dense(&s), 4).unwrap();
    assert_eq!(d.len(), 4);
    assert!(d.iter().all(|v| v.is_finite() && *v >= 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_drop_keeps_a_subset(n in 2usize..25, ratio in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let g = random_graph(n, 0.3, &mut rng);
        let d = drop_edges(&g, ratio, &mut rng).unwrap();
        prop_assert_eq!(d.num_edges(), g.num_edges() - (ratio * g.num_edges() as f64).floor() as usize);
        prop_assert!(d.edges().iter().all(|&(u, v)| g.has_edge(u, v)));
    }

    #[test]
    fn edge_add_keeps_a_superset(n in 4usize..25, ratio in 0.0f64..=0.5, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let g = random_graph(n, 0.2, &mut rng);
        let k = (ratio * g.num_edges() as f64).floor() as usize;
        match add_edges(&g, ratio, &mut rng) {
            Ok(a) => {
                prop_assert_eq!(a.num_edges(), g.num_edges() + k);
                prop_assert!(g.edges().iter().all(|&(u, v)| a.has_edge(u, v)));
            }
            Err(_) => prop_assert!(k > n * (n - 1) / 2 - g.num_edges()),
        }
    }

    #[test]
    fn masking_zeroes_exactly_the_requested_amount(n in 1usize..10, f in 1usize..12, ratio in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = FeatureMatrix::new(Mat::from_fn(n, f, |_, _| 1.0 + rng.random::<f64>())).unwrap();
        let m = mask_attributes(&x, ratio, &mut rng).unwrap();
        let zero_cols = (0..f).filter(|&c| (0..n).all(|r| m.as_mat()[(r, c)] == 0.0)).count();
        prop_assert_eq!(zero_cols, (ratio * f as f64).floor() as usize);
        for c in 0..f {
            let col = m.as_mat().column(c);
            prop_assert!(col.iter().all(|&v| v == 0.0) || col == x.as_mat().column(c));
        }
        let e = mask_attributes_with(&x, ratio, MaskMode::Entries, &mut rng).unwrap();
        let zeros = e.as_mat().as_slice().iter().filter(|&&v| v == 0.0).count();
        prop_assert_eq!(zeros, (ratio * (n * f) as f64).floor() as usize);
    }

    #[test]
    fn bands_partition_the_laplacian(n in 1usize..20, b in 1usize..8, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let g = random_graph(n, 0.3, &mut rng);
        let l = sym_laplacian(&g, NormMode::SymSelfLoop).unwrap();
        let b = b.min(n);
        let dec = band_decompose(&l, b).unwrap();
        prop_assert!(dec.sum().sub(&l).unwrap().max_abs() < 1e-10);
        let ranges = band_ranges(n, b);
        prop_assert_eq!(ranges.iter().map(|r| r.len()).sum::<usize>(), n);
        for (band, range) in dec.bands.iter().zip(&ranges) {
            // A band is Σ λ u uᵀ over orthonormal u, so its squared norm is Σ λ².
            let want: f64 = dec.eigenvalues[range.clone()].iter().map(|v| v * v).sum();
            prop_assert!((band.frobenius_sq() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn feature_bands_split_energy(n in 1usize..8, f in 1usize..24, keep in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let x = FeatureMatrix::new(Mat::from_fn(n, f, |_, _| StandardNormal.sample(&mut rng))).unwrap();
        let b = feature_band_split(&x, keep).unwrap();
        prop_assert!(b.low.add(&b.high).unwrap().sub(x.as_mat()).unwrap().max_abs() < 1e-10);
        let total = x.as_mat().frobenius_sq();
        prop_assert!((b.low.frobenius_sq() + b.high.frobenius_sq() - total).abs() < 1e-8);
        prop_assert!(b.threshold >= (keep * f as f64).floor() as usize);
    }
}
