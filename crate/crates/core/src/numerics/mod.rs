//! Dense linear algebra kernels.

mod dft;
mod eigen;
mod matrix;
mod solve;

pub use dft::{dft_rows, idft_rows, idft_rows_with_residue, ComplexMatrix};
pub use eigen::{symmetric_eig, EigenDecomposition};
pub use matrix::{cosine, dot, norm, Mat};
pub use solve::{linear_solve, MAX_CONDITION};

/// Least-squares map `B` minimising `‖Y − F·B‖_F`, computed through the
/// eigen-pseudo-inverse of `FᵀF` so rank-deficient designs are handled.
pub fn least_squares(f: &Mat, y: &Mat) -> crate::Result<Mat> {
    let gram = f.t_matmul(f)?;
    let rhs = f.t_matmul(y)?;
    let eig = symmetric_eig(&gram)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = top * 1e-12 * gram.rows().max(1) as f64;
    let k = gram.rows();
    // pinv(G) = Σ_{λ>cutoff} u uᵀ / λ
    let mut pinv = Mat::zeros(k, k);
    for (idx, &lambda) in eig.values.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        for i in 0..k {
            let ui = eig.vectors[(i, idx)] / lambda;
            for j in 0..k {
                pinv[(i, j)] += ui * eig.vectors[(j, idx)];
            }
        }
    }
    pinv.matmul(&rhs)
}
