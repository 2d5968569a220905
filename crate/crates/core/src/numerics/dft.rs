//! Row-wise unitary discrete Fourier transform (`1/√F` both directions).

use std::f64::consts::PI;

use super::Mat;
use crate::error::{Error, Result};

/// Complex matrix stored as separate real and imaginary planes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    pub re: Mat,
    pub im: Mat,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            re: Mat::zeros(rows, cols),
            im: Mat::zeros(rows, cols),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.re.shape()
    }

    pub fn abs(&self, r: usize, c: usize) -> f64 {
        self.re[(r, c)].hypot(self.im[(r, c)])
    }
}

/// Twiddle table indexed by `(j·k) mod F` so forward and inverse share
/// identical angle values.
fn twiddles(f: usize) -> (Vec<f64>, Vec<f64>) {
    (0..f)
        .map(|t| {
            let angle = 2.0 * PI * t as f64 / f as f64;
            (angle.cos(), angle.sin())
        })
        .unzip()
}

pub fn dft_rows(x: &Mat) -> ComplexMatrix {
    let (n, f) = x.shape();
    let mut out = ComplexMatrix::zeros(n, f);
    if f == 0 {
        return out;
    }
    let (cos, sin) = twiddles(f);
    let norm = 1.0 / (f as f64).sqrt();
    for r in 0..n {
        let row = x.row(r);
        for k in 0..f {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in row.iter().enumerate() {
                let t = (j * k) % f;
                re += v * cos[t];
                im -= v * sin[t];
            }
            out.re[(r, k)] = re * norm;
            out.im[(r, k)] = im * norm;
        }
    }
    out
}

/// Inverse transform; returns the real part and the largest absolute
/// imaginary residue.
pub fn idft_rows_with_residue(h: &ComplexMatrix) -> (Mat, f64) {
    let (n, f) = h.shape();
    let mut out = Mat::zeros(n, f);
    let mut residue: f64 = 0.0;
    if f == 0 {
        return (out, residue);
    }
    let (cos, sin) = twiddles(f);
    let norm = 1.0 / (f as f64).sqrt();
    for r in 0..n {
        let (hr, hi) = (h.re.row(r), h.im.row(r));
        for j in 0..f {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..f {
                let t = (j * k) % f;
                re += hr[k] * cos[t] - hi[k] * sin[t];
                im += hr[k] * sin[t] + hi[k] * cos[t];
            }
            out[(r, j)] = re * norm;
            residue = residue.max((im * norm).abs());
        }
    }
    (out, residue)
}

/// Inverse transform for spectra of real signals; errors when the imaginary
/// residue exceeds `1e-10 · max(1, ‖H‖_max)`.
pub fn idft_rows(h: &ComplexMatrix) -> Result<Mat> {
    let (out, residue) = idft_rows_with_residue(h);
    let scale = h.re.max_abs().max(h.im.max_abs()).max(1.0);
    if residue > 1e-10 * scale {
        return Err(Error::Numeric(format!(
            "inverse DFT left an imaginary residue of {residue:.3e}"
        )));
    }
    Ok(out)
}
