//! Minimal-norm least squares on top of faer's dense factorizations.

use faer::{Col, Mat, Side};

use crate::error::{CvError, Result};

#[derive(Debug, Clone)]
pub(crate) struct LstsqSolution {
    pub beta: Vec<f64>,
    pub rank: usize,
}

/// Minimal-norm minimizer of `||b - A x||_2` for the `n x p` matrix whose
/// entries are given by `entry(i, j)`.
///
/// Tall and square systems use a thin SVD and drop singular values below
/// `max(n, p) * eps * sigma_max`. Wide systems (`p > n`) go through the
/// eigendecomposition of the `n x n` row Gram matrix `A A^T`, which is much
/// cheaper when `p` is several times `n`; its eigenvalues carry absolute
/// error of order `p * eps * lambda_max`, so that is the cutoff there.
pub(crate) fn min_norm_lstsq(
    n: usize,
    p: usize,
    entry: impl Fn(usize, usize) -> f64,
    b: &[f64],
) -> Result<LstsqSolution> {
    debug_assert_eq!(b.len(), n);
    if p == 0 {
        return Ok(LstsqSolution {
            beta: Vec::new(),
            rank: 0,
        });
    }
    let a = Mat::<f64>::from_fn(n, p, entry);
    let rhs = Col::<f64>::from_fn(n, |i| b[i]);
    let eps = f64::EPSILON;
    let nmax = n.max(p) as f64;

    if p <= n {
        let svd = a
            .thin_svd()
            .map_err(|e| CvError::LinAlg(format!("SVD did not converge: {e:?}")))?;
        let s = svd.S().column_vector();
        let smax = s[0];
        let cutoff = nmax * eps * smax;
        let mut coef = svd.U().transpose() * &rhs;
        let mut rank = 0;
        for i in 0..coef.nrows() {
            if s[i] > cutoff && s[i] > 0.0 {
                coef[i] /= s[i];
                rank += 1;
            } else {
                coef[i] = 0.0;
            }
        }
        let x = svd.V() * &coef;
        Ok(LstsqSolution {
            beta: (0..p).map(|j| x[j]).collect(),
            rank,
        })
    } else {
        let gram = &a * a.transpose();
        let evd = gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| CvError::LinAlg(format!("eigendecomposition did not converge: {e:?}")))?;
        let vals = evd.S().column_vector();
        let lmax = (0..n).map(|i| vals[i]).fold(0.0, f64::max);
        let cutoff = nmax * eps * lmax;
        let mut coef = evd.U().transpose() * &rhs;
        let mut rank = 0;
        for i in 0..n {
            if vals[i] > cutoff && vals[i] > 0.0 {
                coef[i] /= vals[i];
                rank += 1;
            } else {
                coef[i] = 0.0;
            }
        }
        let y = evd.U() * &coef;
        let x = a.transpose() * &y;
        Ok(LstsqSolution {
            beta: (0..p).map(|j| x[j]).collect(),
            rank,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_square_system() {
        let a = [[2.0, 1.0], [1.0, 3.0]];
        let sol = min_norm_lstsq(2, 2, |i, j| a[i][j], &[3.0, 5.0]).unwrap();
        assert_eq!(sol.rank, 2);
        assert_abs_diff_eq!(sol.beta[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.beta[1], 1.4, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_column_splits_weight() {
        // columns identical: minimal norm puts half the weight on each
        let col = [1.0, 2.0, 3.0];
        let sol = min_norm_lstsq(3, 2, |i, _| col[i], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(sol.rank, 1);
        assert_abs_diff_eq!(sol.beta[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.beta[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_system_interpolates_with_min_norm() {
        // x = A^T (A A^T)^{-1} b for full row rank A
        let a = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let sol = min_norm_lstsq(2, 3, |i, j| a[i][j], &[1.0, 2.0]).unwrap();
        assert_eq!(sol.rank, 2);
        // A A^T = [[2,1],[1,2]], inverse times b = [0, 1]
        assert_abs_diff_eq!(sol.beta[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.beta[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.beta[2], 1.0, epsilon = 1e-12);
    }
}
