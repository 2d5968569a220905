//! Two-layer GCN encoder with an MLP projection head.
//!
//! ```text
//! S1 = Â X W1      B1 = BN(S1)      H1 = relu(B1)
//! S2 = Â H1 W2     H  = BN(S2)
//! Q  = H P1        R  = relu(Q)     U  = R P2       Z = rownorm(U)
//! ```
//!
//! `Â` is the self-looped symmetric normalisation. BN has no affine part and
//! is skipped entirely when disabled. Gradients are written by hand.

use std::hash::{Hash, Hasher};
use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, NormMode, Propagator};
use crate::numerics::{dot, Mat};
use crate::rng::rng_from_seed;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderShape {
    pub in_dim: usize,
    pub hidden: usize,
    pub embed: usize,
    pub proj_hidden: usize,
    pub proj_out: usize,
}

impl EncoderShape {
    /// Hidden, embedding and projection widths all equal to `k`.
    pub fn uniform(in_dim: usize, k: usize) -> Self {
        EncoderShape {
            in_dim,
            hidden: k,
            embed: k,
            proj_hidden: k,
            proj_out: k,
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = [self.in_dim, self.hidden, self.embed, self.proj_hidden, self.proj_out];
        if dims.contains(&0) {
            return Err(Error::Config(format!("encoder widths must be >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// Running per-column statistics of one BN layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BnStats {
    fn new(width: usize) -> Self {
        BnStats {
            mean: vec![0.0; width],
            var: vec![1.0; width],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub w1: Mat,
    pub w2: Mat,
    pub p1: Mat,
    pub p2: Mat,
    pub bn_enabled: bool,
    /// Two entries (one per GCN layer) when BN is enabled, empty otherwise.
    pub bn_stats: Vec<BnStats>,
}

pub const TENSOR_NAMES: [&str; 4] = ["w1", "w2", "p1", "p2"];

impl EncoderParams {
    pub fn shape(&self) -> EncoderShape {
        EncoderShape {
            in_dim: self.w1.rows(),
            hidden: self.w1.cols(),
            embed: self.w2.cols(),
            proj_hidden: self.p1.cols(),
            proj_out: self.p2.cols(),
        }
    }

    pub fn tensors(&self) -> [&Mat; 4] {
        [&self.w1, &self.w2, &self.p1, &self.p2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Mat; 4] {
        [&mut self.w1, &mut self.w2, &mut self.p1, &mut self.p2]
    }

    pub fn validate(&self) -> Result<()> {
        let chain = [
            (self.w1.cols(), self.w2.rows()),
            (self.w2.cols(), self.p1.rows()),
            (self.p1.cols(), self.p2.rows()),
        ];
        if chain.iter().any(|(a, b)| a != b) {
            return Err(Error::Shape(format!(
                "weight shapes do not chain: {:?} {:?} {:?} {:?}",
                self.w1.shape(),
                self.w2.shape(),
                self.p1.shape(),
                self.p2.shape()
            )));
        }
        if self.tensors().iter().any(|m| !m.is_finite()) {
            return Err(Error::Numeric("non-finite encoder weight".into()));
        }
        let expected = if self.bn_enabled {
            vec![self.w1.cols(), self.w2.cols()]
        } else {
            vec![]
        };
        let got: Vec<usize> = self.bn_stats.iter().map(|s| s.mean.len()).collect();
        if got != expected || self.bn_stats.iter().any(|s| s.var.len() != s.mean.len()) {
            return Err(Error::Shape(format!("BN statistics widths {got:?}, expected {expected:?}")));
        }
        Ok(())
    }

    fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for m in self.tensors() {
            m.shape().hash(&mut h);
            for v in m.as_slice() {
                v.to_bits().hash(&mut h);
            }
        }
        self.bn_enabled.hash(&mut h);
        h.finish()
    }

    /// Moves the running BN statistics towards the batch statistics recorded
    /// in a train-mode cache. Variances are stored unbiased.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<()> {
        if !self.bn_enabled {
            return Ok(());
        }
        let n = cache.num_nodes as f64;
        let correction = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        let layers = [&cache.bn1, &cache.bn2];
        for (stats, layer) in self.bn_stats.iter_mut().zip(layers) {
            let Some(batch) = layer.as_ref().filter(|l| l.from_batch) else {
                return Err(Error::Config("running stats need a train-mode cache".into()));
            };
            for k in 0..stats.mean.len() {
                stats.mean[k] = (1.0 - BN_MOMENTUM) * stats.mean[k] + BN_MOMENTUM * batch.mean[k];
                stats.var[k] = (1.0 - BN_MOMENTUM) * stats.var[k] + BN_MOMENTUM * batch.var[k] * correction;
            }
        }
        Ok(())
    }
}

/// Uniform `±√(3/fan_in)` entries (unit variance after a fan-in sum).
pub fn init_params(shape: EncoderShape, bn_enabled: bool, seed: u64) -> Result<EncoderParams> {
    shape.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut draw = |rows: usize, cols: usize| {
        let a = (3.0 / rows as f64).sqrt();
        Mat::from_fn(rows, cols, |_, _| rng.random_range(-a..=a))
    };
    let w1 = draw(shape.in_dim, shape.hidden);
    let w2 = draw(shape.hidden, shape.embed);
    let p1 = draw(shape.embed, shape.proj_hidden);
    let p2 = draw(shape.proj_hidden, shape.proj_out);
    let bn_stats = if bn_enabled {
        vec![BnStats::new(shape.hidden), BnStats::new(shape.embed)]
    } else {
        vec![]
    };
    Ok(EncoderParams {
        w1,
        w2,
        p1,
        p2,
        bn_enabled,
        bn_stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    /// Encoder output `H`.
    pub h: Mat,
    /// Projection output `Z`, rows unit norm or zero.
    pub z: Mat,
}

impl Embeddings {
    pub fn num_nodes(&self) -> usize {
        self.z.rows()
    }
}

/// Statistics one BN layer used during a forward pass.
#[derive(Clone, Debug)]
pub struct BnTrace {
    pub mean: Vec<f64>,
    /// Biased batch variance, or the running variance in eval mode.
    pub var: Vec<f64>,
    pub from_batch: bool,
    xhat: Mat,
}

#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub mode: Mode,
    pub num_nodes: usize,
    fingerprint: u64,
    prop: Propagator,
    ax: Mat,
    bn1: Option<BnTrace>,
    b1: Mat,
    ah1: Mat,
    bn2: Option<BnTrace>,
    h: Mat,
    q: Mat,
    r: Mat,
    u_norms: Vec<f64>,
    z: Mat,
}

impl ForwardCache {
    pub fn bn_traces(&self) -> [Option<&BnTrace>; 2] {
        [self.bn1.as_ref(), self.bn2.as_ref()]
    }
}

fn relu(m: &Mat) -> Mat {
    m.map(|v| v.max(0.0))
}

fn relu_mask(grad: &Mat, pre: &Mat) -> Mat {
    let data = grad
        .as_slice()
        .iter()
        .zip(pre.as_slice())
        .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
        .collect();
    Mat::from_vec(grad.rows(), grad.cols(), data).expect("same shape")
}

fn column_stats(m: &Mat) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = m.shape();
    let mut mean = vec![0.0; k];
    for r in 0..n {
        for (a, &v) in mean.iter_mut().zip(m.row(r)) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n.max(1) as f64);
    let mut var = vec![0.0; k];
    for r in 0..n {
        for ((a, &v), &mu) in var.iter_mut().zip(m.row(r)).zip(&mean) {
            *a += (v - mu) * (v - mu);
        }
    }
    var.iter_mut().for_each(|a| *a /= n.max(1) as f64);
    (mean, var)
}

fn batch_norm(s: &Mat, mode: Mode, running: &BnStats) -> (Mat, BnTrace) {
    let (mean, var, from_batch) = match mode {
        Mode::Train => {
            let (m, v) = column_stats(s);
            (m, v, true)
        }
        Mode::Eval => (running.mean.clone(), running.var.clone(), false),
    };
    let inv: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let xhat = Mat::from_fn(s.rows(), s.cols(), |r, c| (s[(r, c)] - mean[c]) * inv[c]);
    let trace = BnTrace {
        mean,
        var,
        from_batch,
        xhat: xhat.clone(),
    };
    (xhat, trace)
}

fn batch_norm_backward(grad: &Mat, trace: &BnTrace) -> Mat {
    let (n, k) = grad.shape();
    let inv: Vec<f64> = trace.var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    if !trace.from_batch {
        return Mat::from_fn(n, k, |r, c| grad[(r, c)] * inv[c]);
    }
    let mut mean_g = vec![0.0; k];
    let mut mean_gx = vec![0.0; k];
    for r in 0..n {
        for c in 0..k {
            mean_g[c] += grad[(r, c)];
            mean_gx[c] += grad[(r, c)] * trace.xhat[(r, c)];
        }
    }
    let nf = n as f64;
    Mat::from_fn(n, k, |r, c| {
        inv[c] * (grad[(r, c)] - mean_g[c] / nf - trace.xhat[(r, c)] * mean_gx[c] / nf)
    })
}

/// Row-wise L2 normalisation; zero rows stay zero.
pub fn normalize_rows(u: &Mat) -> (Mat, Vec<f64>) {
    let norms: Vec<f64> = (0..u.rows()).map(|r| dot(u.row(r), u.row(r)).sqrt()).collect();
    let z = Mat::from_fn(u.rows(), u.cols(), |r, c| {
        if norms[r] > 0.0 {
            u[(r, c)] / norms[r]
        } else {
            0.0
        }
    });
    (z, norms)
}

fn check_inputs(params: &EncoderParams, g: &Graph, x: &FeatureMatrix) -> Result<()> {
    params.validate()?;
    if x.num_nodes() != g.num_nodes() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} nodes",
            x.num_nodes(),
            g.num_nodes()
        )));
    }
    if x.dim() != params.w1.rows() {
        return Err(Error::Shape(format!(
            "feature width {} but first layer expects {}",
            x.dim(),
            params.w1.rows()
        )));
    }
    Ok(())
}

/// Full forward pass; the cache is returned in train mode only.
pub fn forward(params: &EncoderParams, g: &Graph, x: &FeatureMatrix, mode: Mode) -> Result<(Embeddings, Option<ForwardCache>)> {
    let (emb, cache) = forward_traced(params, g, x, mode)?;
    Ok((emb, (mode == Mode::Train).then_some(cache)))
}

/// Forward pass that always records a cache, so the eval-mode BN path can be
/// differentiated too.
pub fn forward_traced(params: &EncoderParams, g: &Graph, x: &FeatureMatrix, mode: Mode) -> Result<(Embeddings, ForwardCache)> {
    check_inputs(params, g, x)?;
    let prop = Propagator::new(g, NormMode::SymSelfLoop)?;
    let ax = prop.apply(x.as_mat())?;
    let s1 = ax.matmul(&params.w1)?;
    let (b1, bn1) = if params.bn_enabled {
        let (b, t) = batch_norm(&s1, mode, &params.bn_stats[0]);
        (b, Some(t))
    } else {
        (s1, None)
    };
    let h1 = relu(&b1);
    let ah1 = prop.apply(&h1)?;
    let s2 = ah1.matmul(&params.w2)?;
    let (h, bn2) = if params.bn_enabled {
        let (b, t) = batch_norm(&s2, mode, &params.bn_stats[1]);
        (b, Some(t))
    } else {
        (s2, None)
    };
    let q = h.matmul(&params.p1)?;
    let r = relu(&q);
    let u = r.matmul(&params.p2)?;
    let (z, u_norms) = normalize_rows(&u);
    if !z.is_finite() || !h.is_finite() {
        return Err(Error::Numeric("non-finite embedding".into()));
    }
    let cache = ForwardCache {
        mode,
        num_nodes: g.num_nodes(),
        fingerprint: params.fingerprint(),
        prop,
        ax,
        bn1,
        b1,
        ah1,
        bn2,
        h: h.clone(),
        q,
        r,
        u_norms,
        z: z.clone(),
    };
    Ok((Embeddings { h, z }, cache))
}

/// Gradients with the same layout as [`EncoderParams`] weights.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderGrads {
    pub w1: Mat,
    pub w2: Mat,
    pub p1: Mat,
    pub p2: Mat,
}

impl EncoderGrads {
    pub fn tensors(&self) -> [&Mat; 4] {
        [&self.w1, &self.w2, &self.p1, &self.p2]
    }
}

pub fn backward(params: &EncoderParams, cache: &ForwardCache, grad_z: &Mat) -> Result<EncoderGrads> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::Config("forward cache does not match these parameters".into()));
    }
    if grad_z.shape() != cache.z.shape() {
        return Err(Error::Shape(format!(
            "gradient shape {:?} but embeddings are {:?}",
            grad_z.shape(),
            cache.z.shape()
        )));
    }
    let z = &cache.z;
    let g_u = Mat::from_fn(z.rows(), z.cols(), |r, c| {
        let n = cache.u_norms[r];
        if n > 0.0 {
            (grad_z[(r, c)] - z[(r, c)] * dot(z.row(r), grad_z.row(r))) / n
        } else {
            0.0
        }
    });
    let p2 = cache.r.t_matmul(&g_u)?;
    let g_r = g_u.matmul_t(&params.p2)?;
    let g_q = relu_mask(&g_r, &cache.q);
    let p1 = cache.h.t_matmul(&g_q)?;
    let g_h = g_q.matmul_t(&params.p1)?;
    let g_s2 = match &cache.bn2 {
        Some(t) => batch_norm_backward(&g_h, t),
        None => g_h,
    };
    let w2 = cache.ah1.t_matmul(&g_s2)?;
    let g_ah1 = g_s2.matmul_t(&params.w2)?;
    let g_h1 = cache.prop.apply_transpose(&g_ah1)?;
    let g_b1 = relu_mask(&g_h1, &cache.b1);
    let g_s1 = match &cache.bn1 {
        Some(t) => batch_norm_backward(&g_b1, t),
        None => g_b1,
    };
    let w1 = cache.ax.t_matmul(&g_s1)?;
    Ok(EncoderGrads { w1, w2, p1, p2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// Single-layer encoder `σ(D̄^{-1}(A+I) X W)` used by the concentration checks.
pub fn forward_theory(w: &Mat, g: &Graph, x: &FeatureMatrix) -> Result<Mat> {
    forward_theory_with(w, g, x, Activation::Relu)
}

pub fn forward_theory_with(w: &Mat, g: &Graph, x: &FeatureMatrix, act: Activation) -> Result<Mat> {
    if x.num_nodes() != g.num_nodes() || x.dim() != w.rows() {
        return Err(Error::Shape(format!(
            "features {:?}, weight {:?}, {} nodes",
            x.as_mat().shape(),
            w.shape(),
            g.num_nodes()
        )));
    }
    let pre = Propagator::new(g, NormMode::Row)?.apply(x.as_mat())?.matmul(w)?;
    Ok(match act {
        Activation::Relu => relu(&pre),
        Activation::Identity => pre,
    })
}

/// `Σ_k ‖w_k‖²` over the columns of `w`.
pub fn weight_norm_sum(w: &Mat) -> f64 {
    (0..w.cols()).map(|c| w.column(c).iter().map(|v| v * v).sum::<f64>()).sum()
}

/// [`weight_norm_sum`] of `w1, w2, p1, p2`.
pub fn weight_norm_sums(params: &EncoderParams) -> Vec<f64> {
    params.tensors().iter().map(|w| weight_norm_sum(w)).collect()
}

// Checkpoint: u64 LE header length, JSON header, then f64 LE tensors in
// header order.

const CHECKPOINT_FORMAT: &str = "spgcl-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    version: u32,
    bn_enabled: bool,
    tensors: Vec<TensorInfo>,
}

fn checkpoint_tensors(params: &EncoderParams) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mut out: Vec<(String, Vec<usize>, Vec<f64>)> = TENSOR_NAMES
        .iter()
        .zip(params.tensors())
        .map(|(name, m)| (name.to_string(), vec![m.rows(), m.cols()], m.as_slice().to_vec()))
        .collect();
    for (i, s) in params.bn_stats.iter().enumerate() {
        out.push((format!("bn{}_mean", i + 1), vec![s.mean.len()], s.mean.clone()));
        out.push((format!("bn{}_var", i + 1), vec![s.var.len()], s.var.clone()));
    }
    out
}

pub fn checkpoint_to_bytes(params: &EncoderParams) -> Result<Vec<u8>> {
    params.validate()?;
    let tensors = checkpoint_tensors(params);
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        bn_enabled: params.bn_enabled,
        tensors: tensors
            .iter()
            .map(|(name, shape, _)| TensorInfo {
                name: name.clone(),
                shape: shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Parse(e.to_string()))?;
    let mut buf = Vec::new();
    buf.write_all(&(json.len() as u64).to_le_bytes()).expect("vec write");
    buf.write_all(&json).expect("vec write");
    for (_, _, data) in &tensors {
        for v in data {
            buf.write_all(&v.to_le_bytes()).expect("vec write");
        }
    }
    Ok(buf)
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<EncoderParams> {
    let bad = |msg: &str| Error::Parse(format!("checkpoint: {msg}"));
    let mut cursor = bytes;
    let mut len = [0u8; 8];
    cursor.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
    let len = u64::from_le_bytes(len) as usize;
    if cursor.len() < len {
        return Err(bad("truncated header"));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&cursor[..len]).map_err(|e| bad(&e.to_string()))?;
    cursor = &cursor[len..];
    if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
        return Err(bad("unknown format or version"));
    }
    let mut tensors = Vec::new();
    for info in &header.tensors {
        let count: usize = info.shape.iter().product();
        if cursor.len() < count * 8 {
            return Err(bad(&format!("tensor {} truncated", info.name)));
        }
        let data: Vec<f64> = cursor[..count * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        cursor = &cursor[count * 8..];
        tensors.push((info, data));
    }
    if !cursor.is_empty() {
        return Err(bad("trailing bytes"));
    }
    let expected_count = if header.bn_enabled { 8 } else { 4 };
    if tensors.len() != expected_count {
        return Err(bad(&format!("{} tensors, expected {expected_count}", tensors.len())));
    }
    let mut mats = Vec::new();
    for (info, data) in tensors.drain(..4) {
        let [r, c] = info.shape[..] else {
            return Err(bad(&format!("tensor {} is not a matrix", info.name)));
        };
        mats.push(Mat::from_vec(r, c, data).map_err(|e| bad(&e.to_string()))?);
    }
    let bn_stats = tensors
        .chunks(2)
        .map(|pair| BnStats {
            mean: pair[0].1.clone(),
            var: pair[1].1.clone(),
        })
        .collect();
    let mut it = mats.into_iter();
    let params = EncoderParams {
        w1: it.next().expect("four"),
        w2: it.next().expect("four"),
        p1: it.next().expect("four"),
        p2: it.next().expect("four"),
        bn_enabled: header.bn_enabled,
        bn_stats,
    };
    params.validate().map_err(|e| bad(&e.to_string()))?;
    Ok(params)
}

pub fn write_checkpoint(path: &Path, params: &EncoderParams) -> Result<()> {
    let bytes = checkpoint_to_bytes(params)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<EncoderParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(m: Mat) -> FeatureMatrix {
        FeatureMatrix::new(m).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let shape = EncoderShape::uniform(100, 8);
        let a = init_params(shape, false, 5).unwrap();
        assert_eq!(a, init_params(shape, false, 5).unwrap());
        assert_ne!(a.w1, init_params(shape, false, 6).unwrap().w1);
        assert!(a.w1.max_abs() <= 0.1 * 3f64.sqrt());
        assert!(init_params(EncoderShape::uniform(0, 8), false, 1).is_err());
    }

    #[test]
    fn single_node_linear_path() {
        let mut p = init_params(EncoderShape::uniform(2, 2), false, 0).unwrap();
        for m in p.tensors_mut() {
            *m = Mat::identity(2);
        }
        let x = feats(Mat::from_rows(&[[3.0, 4.0]]).unwrap());
        let (emb, cache) = forward(&p, &Graph::empty(1), &x, Mode::Eval).unwrap();
        assert!(cache.is_none());
        assert_eq!(emb.h.row(0), &[3.0, 4.0]);
        assert!((emb.z[(0, 0)] - 0.6).abs() < 1e-15 && (emb.z[(0, 1)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_features_give_zero_rows() {
        let p = init_params(EncoderShape::uniform(3, 4), false, 1).unwrap();
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let (emb, _) = forward(&p, &g, &feats(Mat::zeros(3, 3)), Mode::Train).unwrap();
        assert_eq!(emb.h.max_abs(), 0.0);
        assert_eq!(emb.z.max_abs(), 0.0);
    }

    #[test]
    fn theory_forward_examples() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let x = feats(Mat::identity(2));
        let z = forward_theory(&Mat::identity(2), &g, &x).unwrap();
        assert_eq!(z, Mat::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap());
        assert_eq!(forward_theory(&Mat::zeros(2, 2), &g, &x).unwrap().max_abs(), 0.0);
        let w = Mat::from_rows(&[[1.0, -2.0], [0.5, 1.0]]).unwrap();
        let lin = forward_theory_with(&w, &g, &x, Activation::Identity).unwrap();
        let oracle = Mat::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap().matmul(&w).unwrap();
        assert!(lin.sub(&oracle).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn weight_norms() {
        assert_eq!(weight_norm_sum(&Mat::zeros(3, 4)), 0.0);
        assert_eq!(weight_norm_sum(&Mat::identity(5)), 5.0);
        let w = Mat::from_fn(4, 3, |r, c| (r as f64 - 1.5) * (c as f64 + 0.3));
        assert!((weight_norm_sum(&w) - w.frobenius_sq()).abs() < 1e-12);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let x = feats(Mat::from_fn(3, 2, |r, c| (r + 2 * c) as f64 - 1.0));
        let p = init_params(EncoderShape::uniform(2, 3), false, 2).unwrap();
        let (_, cache) = forward(&p, &g, &x, Mode::Train).unwrap();
        let cache = cache.unwrap();
        let mut q = p.clone();
        q.w1[(0, 0)] += 1.0;
        assert!(backward(&q, &cache, &Mat::zeros(3, 3)).is_err());
        assert!(backward(&p, &cache, &Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        for bn in [false, true] {
            let p = init_params(EncoderShape::uniform(5, 3), bn, 9).unwrap();
            let bytes = checkpoint_to_bytes(&p).unwrap();
            assert_eq!(checkpoint_from_bytes(&bytes).unwrap(), p);
            assert!(checkpoint_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}
