use super::Mat;
use crate::error::{Error, Result};

/// Largest 1-norm condition number accepted by [`linear_solve`].
pub const MAX_CONDITION: f64 = 1e12;

/// LU factorisation with partial pivoting, `P·A = L·U`.
struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &Mat) -> Result<Lu> {
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|r| (r, lu[(r, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= f64::EPSILON * scale * n as f64 {
                return Err(Error::Numeric(format!(
                    "singular matrix: pivot {pivot:.3e} in column {k}"
                )));
            }
            if pivot_row != k {
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(pivot_row, c)];
                    lu[(pivot_row, c)] = tmp;
                }
                perm.swap(k, pivot_row);
            }
            let diag = lu[(k, k)];
            for r in k + 1..n {
                let factor = lu[(r, k)] / diag;
                lu[(r, k)] = factor;
                if factor == 0.0 {
                    continue;
                }
                for c in k + 1..n {
                    lu[(r, c)] -= factor * lu[(k, c)];
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    fn solve_transposed_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * w[j];
            }
            w[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// Hager's estimate of `‖A⁻¹‖₁`.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.perm.len();
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve_vec(&x);
            estimate = y.iter().map(|v| v.abs()).sum();
            let sign: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transposed_vec(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        estimate
    }
}

fn norm1(m: &Mat) -> f64 {
    (0..m.cols())
        .map(|c| (0..m.rows()).map(|r| m[(r, c)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `m · x = b` for every column of `b`.
pub fn linear_solve(m: &Mat, b: &Mat) -> Result<Mat> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "linear_solve needs a square system, got {:?}",
            m.shape()
        )));
    }
    if b.rows() != m.rows() {
        return Err(Error::Shape(format!(
            "linear_solve: rhs has {} rows, system has {}",
            b.rows(),
            m.rows()
        )));
    }
    if !m.is_finite() || !b.is_finite() {
        return Err(Error::Numeric("linear_solve: non-finite input".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Mat::zeros(0, b.cols()));
    }
    let lu = Lu::factor(m)?;
    let cond = norm1(m) * lu.inverse_norm1_estimate();
    if !(cond < MAX_CONDITION) {
        return Err(Error::Numeric(format!(
            "ill-conditioned system: condition estimate {cond:.3e}"
        )));
    }
    let mut x = Mat::zeros(n, b.cols());
    for c in 0..b.cols() {
        let sol = lu.solve_vec(&b.column(c));
        for (r, v) in sol.into_iter().enumerate() {
            x[(r, c)] = v;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let b = Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(linear_solve(&Mat::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn scaled_identity() {
        let x = linear_solve(&Mat::identity(3).scale(2.0), &Mat::identity(3)).unwrap();
        assert_eq!(x, Mat::identity(3).scale(0.5));
    }

    #[test]
    fn singular_rejected() {
        let m = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(
            linear_solve(&m, &Mat::identity(2)),
            Err(Error::Numeric(_))
        ));
        let near = Mat::from_rows(&[[1.0, 1.0], [1.0, 1.0 + 1e-14]]).unwrap();
        assert!(linear_solve(&near, &Mat::identity(2)).is_err());
    }

    #[test]
    fn pivoting_needed() {
        let m = Mat::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let b = Mat::from_rows(&[[3.0], [5.0]]).unwrap();
        let x = linear_solve(&m, &b).unwrap();
        assert_eq!(x, Mat::from_rows(&[[5.0], [3.0]]).unwrap());
    }
}
