//! Frequency-band views of augmentations.
//!
//! Laplacians are split into `B` bands by eigen-index: the ascending spectrum
//! is cut into contiguous, near-equal blocks and band `m` is
//! `Σ_{i∈block m} λ_i u_i u_iᵀ`. Features are split row-wise in the DFT
//! domain, keeping conjugate frequency pairs together so both parts stay real.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{sym_laplacian, FeatureMatrix, Graph, NormMode};
use crate::numerics::{dft_rows, idft_rows, symmetric_eig, ComplexMatrix, Mat};

#[derive(Clone, Debug)]
pub struct BandDecomposition {
    pub bands: Vec<Mat>,
    /// Half-open eigen-index range of each band.
    pub ranges: Vec<std::ops::Range<usize>>,
    pub eigenvalues: Vec<f64>,
}

impl BandDecomposition {
    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn sum(&self) -> Mat {
        let n = self.eigenvalues.len();
        let mut total = Mat::zeros(n, n);
        for b in &self.bands {
            total.axpy(1.0, b).expect("bands share one shape");
        }
        total
    }
}

/// Contiguous near-equal blocks of `0..n`; the first `n mod b` blocks get one
/// extra index.
pub fn band_ranges(n: usize, b: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / b;
    let extra = n % b;
    let mut start = 0;
    (0..b)
        .map(|m| {
            let len = base + usize::from(m < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

pub fn band_decompose(l_sym: &Mat, num_bands: usize) -> Result<BandDecomposition> {
    if num_bands == 0 {
        return Err(Error::Config("need at least one band".into()));
    }
    if !l_sym.is_square() {
        return Err(Error::Shape(format!("Laplacian shape {:?}", l_sym.shape())));
    }
    let n = l_sym.rows();
    if n < num_bands {
        return Err(Error::Config(format!("{num_bands} bands for {n} eigenvalues")));
    }
    let eig = symmetric_eig(l_sym)?;
    let ranges = band_ranges(n, num_bands);
    let bands = ranges.iter().map(|r| eig.partial_reconstruction(r.clone())).collect();
    Ok(BandDecomposition {
        bands,
        ranges,
        eigenvalues: eig.values,
    })
}

/// Either a graph (Laplacian with self-loops, as for original graphs) or a
/// dense non-negative weighted adjacency such as a diffusion matrix, whose
/// Laplacian is `I − D_w^{-1/2} S D_w^{-1/2}` with weighted degrees `D_w`.
#[derive(Clone, Copy, Debug)]
pub enum LaplacianSource<'a> {
    Graph(&'a Graph),
    Dense(&'a Mat),
}

impl LaplacianSource<'_> {
    pub fn num_nodes(&self) -> usize {
        match self {
            LaplacianSource::Graph(g) => g.num_nodes(),
            LaplacianSource::Dense(m) => m.rows(),
        }
    }

    pub fn laplacian(&self) -> Result<Mat> {
        match self {
            LaplacianSource::Graph(g) => sym_laplacian(g, NormMode::SymSelfLoop),
            LaplacianSource::Dense(s) => weighted_sym_laplacian(s),
        }
    }
}

pub fn weighted_sym_laplacian(s: &Mat) -> Result<Mat> {
    if !s.is_square() {
        return Err(Error::Shape(format!("weighted adjacency shape {:?}", s.shape())));
    }
    let n = s.rows();
    let deg: Vec<f64> = (0..n).map(|i| s.row(i).iter().sum()).collect();
    if let Some(i) = deg.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Graph(format!("zero degree at node {i}")));
    }
    Ok(Mat::from_fn(n, n, |i, j| {
        let a = s[(i, j)] / (deg[i] * deg[j]).sqrt();
        if i == j {
            1.0 - a
        } else {
            -a
        }
    }))
}

/// `‖L^m − L̃^m‖_F` for every band, each side decomposed from its own spectrum.
pub fn band_distances(original: LaplacianSource<'_>, augmented: LaplacianSource<'_>, num_bands: usize) -> Result<Vec<f64>> {
    if original.num_nodes() != augmented.num_nodes() {
        return Err(Error::Shape(format!(
            "node counts differ: {} vs {}",
            original.num_nodes(),
            augmented.num_nodes()
        )));
    }
    let a = band_decompose(&original.laplacian()?, num_bands)?;
    let b = band_decompose(&augmented.laplacian()?, num_bands)?;
    a.bands
        .iter()
        .zip(&b.bands)
        .map(|(x, y)| Ok(x.sub(y)?.frobenius()))
        .collect()
}

/// Column order of DFT frequencies by `|frequency|`: `0, 1, F−1, 2, F−2, …`.
pub fn frequency_order(f: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(f);
    if f == 0 {
        return order;
    }
    order.push(0);
    for k in 1..=f / 2 {
        order.push(k);
        if f - k != k {
            order.push(f - k);
        }
    }
    order
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBands {
    pub low: Mat,
    pub high: Mat,
    /// Number of frequency columns kept in the low band.
    pub threshold: usize,
}

/// Splits each row into low- and high-frequency parts. The low band holds the
/// first `⌊keep_fraction·F⌋` columns of [`frequency_order`], extended to
/// complete a conjugate pair when the cut would separate one.
pub fn feature_band_split(x: &FeatureMatrix, keep_fraction: f64) -> Result<FeatureBands> {
    if !(0.0..=1.0).contains(&keep_fraction) {
        return Err(Error::Config(format!("keep fraction {keep_fraction} outside [0, 1]")));
    }
    let f = x.dim();
    let order = frequency_order(f);
    let mut threshold = (keep_fraction * f as f64).floor() as usize;
    if threshold > 0 && threshold < f {
        let last = order[threshold - 1];
        if last != 0 && order[threshold] == f - last {
            threshold += 1;
        }
    }
    let spectrum = dft_rows(x.as_mat());
    let (n, _) = spectrum.shape();
    let mut low = ComplexMatrix::zeros(n, f);
    let mut high = ComplexMatrix::zeros(n, f);
    for (pos, &col) in order.iter().enumerate() {
        let target = if pos < threshold { &mut low } else { &mut high };
        for r in 0..n {
            target.re[(r, col)] = spectrum.re[(r, col)];
            target.im[(r, col)] = spectrum.im[(r, col)];
        }
    }
    Ok(FeatureBands {
        low: idft_rows(&low)?,
        high: idft_rows(&high)?,
        threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskingDistances {
    pub f_low: f64,
    pub f_high: f64,
}

/// `‖X^l − X̃^l‖_F` and `‖X^h − X̃^h‖_F`.
pub fn masking_band_distances(x: &FeatureMatrix, x_masked: &FeatureMatrix, keep_fraction: f64) -> Result<MaskingDistances> {
    if x.as_mat().shape() != x_masked.as_mat().shape() {
        return Err(Error::Shape(format!(
            "feature shapes differ: {:?} vs {:?}",
            x.as_mat().shape(),
            x_masked.as_mat().shape()
        )));
    }
    let a = feature_band_split(x, keep_fraction)?;
    let b = feature_band_split(x_masked, keep_fraction)?;
    Ok(MaskingDistances {
        f_low: a.low.sub(&b.low)?.frobenius(),
        f_high: a.high.sub(&b.high)?.frobenius(),
    })
}
