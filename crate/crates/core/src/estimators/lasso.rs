use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::SampleBatch;
use crate::error::{CvError, Result};

/// `sign(z) * max(|z| - lambda, 0)`.
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub max_sweeps: usize,
    /// Stop once no standardized coefficient moves by more than this in a
    /// full sweep.
    pub tol: f64,
    /// Keep the objective value after every sweep in [`CdStats`].
    #[serde(default)]
    pub record_objective: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 1000,
            tol: 1e-7,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CdStats {
    pub sweeps: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// A LASSO problem on a set of rows, centered on those rows and with each
/// column scaled to unit empirical second moment.
///
/// Coefficients `b` live on the standardized scale; `to_original` maps them
/// back to coefficients of the raw controls.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    rows: usize,
    cols: usize,
    /// Column-major standardized design.
    u: Vec<f64>,
    y: Vec<f64>,
    scale: Vec<f64>,
    /// `||u_j||^2 / rows`; 1 up to rounding for usable columns, 0 otherwise.
    sq: Vec<f64>,
    f_mean: f64,
    h_mean: Vec<f64>,
}

impl LassoProblem {
    /// Problem on the first `n_rows` rows of `batch`.
    pub fn from_batch(batch: &SampleBatch, n_rows: usize) -> Result<Self> {
        if n_rows == 0 || n_rows > batch.n() {
            return Err(CvError::invalid("N", format!("must be in 1..={}, got {n_rows}", batch.n())));
        }
        let rows: Vec<usize> = (0..n_rows).collect();
        Self::from_rows(batch.design(), batch.f_vals(), &rows)
    }

    /// Problem on an arbitrary subset of rows of a raw design.
    pub fn from_rows(h: ArrayView2<'_, f64>, f: &[f64], rows: &[usize]) -> Result<Self> {
        if h.nrows() != f.len() {
            return Err(CvError::DimensionMismatch {
                expected: f.len(),
                got: h.nrows(),
                context: "design rows",
            });
        }
        if rows.is_empty() {
            return Err(CvError::invalid("rows", "at least one row is required"));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= f.len()) {
            return Err(CvError::invalid("rows", format!("row {r} out of range")));
        }
        let nr = rows.len();
        let m = h.ncols();
        let fs: Vec<f64> = rows.iter().map(|&i| f[i]).collect();
        if fs.iter().any(|v| !v.is_finite()) {
            return Err(CvError::NonFinite("integrand values"));
        }
        let f_mean = fs.iter().sum::<f64>() / nr as f64;
        let y = fs.iter().map(|v| v - f_mean).collect();

        let mut u = vec![0.0; nr * m];
        let mut scale = vec![0.0; m];
        let mut sq = vec![0.0; m];
        let mut h_mean = vec![0.0; m];
        for j in 0..m {
            let col = h.column(j);
            let dst = &mut u[j * nr..(j + 1) * nr];
            let mut big = 0.0f64;
            for (d, &i) in dst.iter_mut().zip(rows) {
                *d = col[i];
                big = big.max(d.abs());
            }
            if !big.is_finite() {
                return Err(CvError::NonFinite("design matrix"));
            }
            let mu = dst.iter().sum::<f64>() / nr as f64;
            h_mean[j] = mu;
            let mut ss = 0.0;
            for d in dst.iter_mut() {
                *d -= mu;
                ss += *d * *d;
            }
            let s = (ss / nr as f64).sqrt();
            // a column constant on these rows only carries rounding noise
            if s <= 100.0 * f64::EPSILON * big || s == 0.0 {
                dst.iter_mut().for_each(|d| *d = 0.0);
                continue;
            }
            scale[j] = s;
            let mut s2 = 0.0;
            for d in dst.iter_mut() {
                *d /= s;
                s2 += *d * *d;
            }
            sq[j] = s2 / nr as f64;
        }
        Ok(Self {
            rows: nr,
            cols: m,
            u,
            y,
            scale,
            sq,
            f_mean,
            h_mean,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of columns that are not constant on the problem rows.
    pub fn usable_cols(&self) -> usize {
        self.scale.iter().filter(|&&s| s > 0.0).count()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.u[j * self.rows..(j + 1) * self.rows]
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    /// Column scales `||H_c[:, j]|| / sqrt(rows)`; zero for unusable columns.
    pub fn scales(&self) -> &[f64] {
        &self.scale
    }

    pub fn f_mean(&self) -> f64 {
        self.f_mean
    }

    pub fn h_mean(&self) -> &[f64] {
        &self.h_mean
    }

    /// `max_j |u_j^T y| / rows`.
    pub fn lambda_max(&self) -> f64 {
        (0..self.cols)
            .map(|j| dot(self.column(j), &self.y).abs() / self.rows as f64)
            .fold(0.0, f64::max)
    }

    pub fn residual(&self, b: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for (j, &bj) in b.iter().enumerate() {
            if bj != 0.0 {
                axpy(-bj, self.column(j), &mut r);
            }
        }
        r
    }

    /// `(1 / 2 rows) ||y - U b||^2 + lambda ||b||_1`.
    pub fn objective(&self, b: &[f64], lambda: f64) -> f64 {
        let r = self.residual(b);
        dot(&r, &r) / (2.0 * self.rows as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `u_j^T (y - U b) / rows` for every column.
    pub fn correlations(&self, b: &[f64]) -> Vec<f64> {
        let r = self.residual(b);
        (0..self.cols)
            .map(|j| dot(self.column(j), &r) / self.rows as f64)
            .collect()
    }

    pub fn to_original(&self, b: &[f64]) -> Vec<f64> {
        b.iter()
            .zip(&self.scale)
            .map(|(&v, &s)| if s > 0.0 { v / s } else { 0.0 })
            .collect()
    }

    /// Intercept matching original-scale coefficients on these rows.
    pub fn intercept(&self, beta: &[f64]) -> f64 {
        self.f_mean - beta.iter().zip(&self.h_mean).map(|(b, h)| b * h).sum::<f64>()
    }

    /// Cyclic coordinate descent with an active-set strategy: after each
    /// full sweep, iterate on the nonzero coordinates until they settle,
    /// then confirm with another full sweep.
    pub fn solve(&self, lambda: f64, cfg: &LassoConfig, warm: Option<&[f64]>) -> Result<(Vec<f64>, CdStats)> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CvError::invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        if cfg.max_sweeps == 0 {
            return Err(CvError::invalid("max_sweeps", "must be positive"));
        }
        let mut b = match warm {
            Some(w) if w.len() == self.cols => w
                .iter()
                .zip(&self.sq)
                .map(|(&v, &q)| if q > 0.0 { v } else { 0.0 })
                .collect(),
            Some(w) => {
                return Err(CvError::DimensionMismatch {
                    expected: self.cols,
                    got: w.len(),
                    context: "warm start",
                })
            }
            None => vec![0.0; self.cols],
        };
        let mut r = self.residual(&b);
        let mut stats = CdStats::default();
        let usable: Vec<usize> = (0..self.cols).filter(|&j| self.sq[j] > 0.0).collect();
        let record = |stats: &mut CdStats, r: &[f64], b: &[f64]| {
            if cfg.record_objective {
                let pen: f64 = b.iter().map(|v| v.abs()).sum();
                stats
                    .objective_trace
                    .push(dot(r, r) / (2.0 * self.rows as f64) + lambda * pen);
            }
        };
        record(&mut stats, &r, &b);

        'outer: while stats.sweeps < cfg.max_sweeps {
            let change = self.sweep(&usable, lambda, &mut b, &mut r);
            stats.sweeps += 1;
            record(&mut stats, &r, &b);
            if change < cfg.tol {
                stats.converged = true;
                break;
            }
            loop {
                if stats.sweeps >= cfg.max_sweeps {
                    break 'outer;
                }
                let active: Vec<usize> = usable.iter().copied().filter(|&j| b[j] != 0.0).collect();
                let change = self.sweep(&active, lambda, &mut b, &mut r);
                stats.sweeps += 1;
                record(&mut stats, &r, &b);
                if change < cfg.tol {
                    break;
                }
            }
        }
        Ok((b, stats))
    }

    fn sweep(&self, cols: &[usize], lambda: f64, b: &mut [f64], r: &mut [f64]) -> f64 {
        let nr = self.rows as f64;
        let mut change = 0.0f64;
        for &j in cols {
            let u = self.column(j);
            let a = self.sq[j];
            let z = dot(u, r) / nr + a * b[j];
            let new = soft_threshold(z, lambda) / a;
            let delta = new - b[j];
            if delta != 0.0 {
                axpy(-delta, u, r);
                b[j] = new;
                change = change.max(delta.abs());
            }
        }
        change
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// LASSO coefficients (original scale) on the whole batch, with the sweep
/// count.
pub fn lasso_cd(batch: &SampleBatch, lambda: f64, max_sweeps: usize, tol: f64) -> Result<(Vec<f64>, usize)> {
    let prob = LassoProblem::from_batch(batch, batch.n())?;
    let cfg = LassoConfig {
        max_sweeps,
        tol,
        record_objective: false,
    };
    let (b, stats) = prob.solve(lambda, &cfg, None)?;
    Ok((prob.to_original(&b), stats.sweeps))
}

/// Smallest penalty giving the zero solution on the standardized problem
/// built from the first `n_rows` rows.
pub fn lambda_max(batch: &SampleBatch, n_rows: usize) -> Result<f64> {
    Ok(LassoProblem::from_batch(batch, n_rows)?.lambda_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(n: usize, m: usize, seed: u64) -> SampleBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Array2::from_shape_fn((n, m), |_| rng.gen::<f64>() * 2.0 - 1.0);
        let f: Vec<f64> = (0..n)
            .map(|i| 1.0 + 2.0 * h[[i, 0]] - h[[i, 1.min(m - 1)]] + 0.3 * rng.gen::<f64>())
            .collect();
        SampleBatch::from_design(f, h).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
    }

    #[test]
    fn scalar_closed_form() {
        let b = random_batch(40, 1, 1);
        let p = LassoProblem::from_batch(&b, 40).unwrap();
        let u = p.column(0);
        assert_abs_diff_eq!(dot(u, u) / 40.0, 1.0, epsilon = 1e-12);
        let z = dot(u, p.response()) / 40.0;
        for lam in [0.01, 0.1, 0.5, 2.0] {
            let (bs, _) = p.solve(lam, &LassoConfig::default(), None).unwrap();
            assert_abs_diff_eq!(bs[0], soft_threshold(z, lam), epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda_max_brackets_zero_solution() {
        let b = random_batch(50, 6, 2);
        let lm = lambda_max(&b, 50).unwrap();
        let (beta, _) = lasso_cd(&b, lm * 1.0001, 1000, 1e-7).unwrap();
        assert!(beta.iter().all(|&v| v == 0.0));
        let (beta, _) = lasso_cd(&b, lm * 0.99, 1000, 1e-7).unwrap();
        assert!(beta.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn lambda_max_homogeneous_and_zero() {
        let b = random_batch(30, 4, 3);
        let f2: Vec<f64> = b.f_vals().iter().map(|v| 2.0 * v).collect();
        let b2 = SampleBatch::from_design(f2, b.design().to_owned()).unwrap();
        assert_abs_diff_eq!(
            lambda_max(&b2, 30).unwrap(),
            2.0 * lambda_max(&b, 30).unwrap(),
            epsilon = 1e-12
        );
        let c = SampleBatch::from_design(vec![4.0; 30], b.design().to_owned()).unwrap();
        assert_eq!(lambda_max(&c, 30).unwrap(), 0.0);
        assert!(lambda_max(&b, 0).is_err());
        assert!(lambda_max(&b, 31).is_err());
    }

    #[test]
    fn kkt_holds_at_solution() {
        let b = random_batch(60, 8, 4);
        let p = LassoProblem::from_batch(&b, 60).unwrap();
        let tol = 1e-7;
        let lam = 0.2 * p.lambda_max();
        let (bs, stats) = p.solve(lam, &LassoConfig::default(), None).unwrap();
        assert!(stats.converged);
        for (j, g) in p.correlations(&bs).iter().enumerate() {
            if bs[j] == 0.0 {
                assert!(g.abs() <= lam * (1.0 + 10.0 * tol));
            } else {
                assert!((g.abs() - lam).abs() <= 10.0 * tol);
                assert_eq!(g.signum(), bs[j].signum());
            }
        }
    }

    #[test]
    fn constant_column_is_skipped() {
        let mut h = Array2::from_shape_fn((20, 3), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        h.column_mut(1).fill(3.0);
        let f: Vec<f64> = (0..20).map(|i| h[[i, 0]] + 0.1 * i as f64).collect();
        let b = SampleBatch::from_design(f, h).unwrap();
        let (beta, _) = lasso_cd(&b, 1e-3, 1000, 1e-9).unwrap();
        assert_eq!(beta[1], 0.0);
        assert!(beta[0] != 0.0);
    }

    #[test]
    fn objective_trace_nonincreasing() {
        let b = random_batch(45, 9, 5);
        let p = LassoProblem::from_batch(&b, 45).unwrap();
        let cfg = LassoConfig {
            record_objective: true,
            ..Default::default()
        };
        let (_, stats) = p.solve(0.01 * p.lambda_max(), &cfg, None).unwrap();
        for w in stats.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
    }

    #[test]
    fn original_scale_matches_fit() {
        // with tiny lambda the fit approaches OLS on centered data
        let b = random_batch(80, 3, 6);
        let (beta, _) = lasso_cd(&b, 1e-10, 5000, 1e-13).unwrap();
        let ols = crate::estimators::ols_estimate(&b).unwrap();
        for (x, y) in beta.iter().zip(&ols.beta) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-7);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let b = random_batch(10, 2, 7);
        assert!(lasso_cd(&b, -1.0, 10, 1e-7).is_err());
        assert!(lasso_cd(&b, f64::NAN, 10, 1e-7).is_err());
        assert!(lasso_cd(&b, 0.1, 0, 1e-7).is_err());
    }
}
