//! Single-pass, augmentation-free graph contrastive learning.
//!
//! A GCN encoder is trained by mining positive pairs from its own embedding
//! similarities inside a small neighbourhood pool and contrasting them with
//! uniformly sampled negatives. Alongside the trainer the crate ships the
//! numerical checks for the method's theory (matrix factorisation view,
//! concentration of aggregated features, downstream error bound) and the
//! spectral tools used to study classic graph augmentations.

pub mod augment;
pub mod cli;
pub mod contrastive;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod numerics;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
