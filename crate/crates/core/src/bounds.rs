//! Numeric evaluators for the concentration bounds of the OLS, LASSO and
//! LSLASSO control-variate estimators, and an empirical coverage check.

use serde::{Deserialize, Serialize};

use crate::basis::{build_design, diagnostics, leverage, BasisSpec, Family};
use crate::error::{CvError, Result};
use crate::estimators::{
    ols_estimate, oracle_estimate, lasso_estimate, lslasso_estimate, SampleBatch, Selector,
};
use crate::harness::{run_indexed, sample_uniform_stream};

/// Inputs of the bound formulas. Each evaluator uses a subset and reports
/// the first missing field it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub tau: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub n_sub: Option<usize>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_star: Option<f64>,
    pub gamma_2star: Option<f64>,
    pub u_h: Option<f64>,
    pub b: Option<f64>,
    pub b_star: Option<f64>,
    pub ell_star: Option<usize>,
    pub lambda: Option<f64>,
    pub beta_min: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or_else(|| CvError::invalid(name, "required by this bound"))
}

fn pos(v: Option<f64>, name: &'static str) -> Result<f64> {
    let x = need(v, name)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(CvError::invalid(name, format!("must be positive and finite, got {x}")));
    }
    Ok(x)
}

fn nonneg(v: Option<f64>, name: &'static str) -> Result<f64> {
    let x = need(v, name)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(CvError::invalid(name, format!("must be nonnegative and finite, got {x}")));
    }
    Ok(x)
}

fn count(v: Option<usize>, name: &'static str) -> Result<f64> {
    match need(v, name)? {
        0 => Err(CvError::invalid(name, "must be at least 1")),
        k => Ok(k as f64),
    }
}

impl BoundParams {
    fn delta(&self) -> Result<f64> {
        let d = need(self.delta, "delta")?;
        if !(d > 0.0 && d < 1.0) {
            return Err(CvError::Domain(format!("delta must lie in (0, 1), got {d}")));
        }
        Ok(d)
    }
}

/// Where the value of `B` used by the OLS bound came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BSource {
    Supplied,
    /// `m U_h^2 / gamma`.
    EigenvalueBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsBound {
    pub bound: f64,
    pub admissible: bool,
    pub b: f64,
    pub b_source: BSource,
    pub n_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoBound {
    /// With the supplied `lambda`, or `None` when no penalty was given.
    pub bound_general: Option<f64>,
    pub bound_at_min_lambda: f64,
    pub lambda_min: f64,
    pub admissible: bool,
    pub n_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaInterval {
    pub lo: f64,
    pub hi: f64,
    pub nonempty: bool,
    /// Whether `n` meets the sample-size condition for support recovery.
    pub n_admissible: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsLassoBound {
    pub bound: f64,
    pub admissible: bool,
    pub b_star: f64,
    pub b_star_source: BSource,
    pub n_sub_min: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

/// `sqrt(2 log(2/delta)) tau / sqrt(n)`.
pub fn oracle_bound(p: &BoundParams) -> Result<f64> {
    let delta = p.delta()?;
    let tau = nonneg(p.tau, "tau")?;
    let n = count(p.n, "n")?;
    Ok((2.0 * (2.0 / delta).ln()).sqrt() * tau / n.sqrt())
}

pub fn ols_bound(p: &BoundParams) -> Result<OlsBound> {
    let delta = p.delta()?;
    let tau = nonneg(p.tau, "tau")?;
    let n = count(p.n, "n")?;
    let m = count(p.m, "m")?;
    let (b, b_source) = match p.b {
        Some(b) => {
            if !(b >= m) {
                return Err(CvError::invalid("b", format!("B is at least m = {m}, got {b}")));
            }
            (b, BSource::Supplied)
        }
        None => {
            let u = pos(p.u_h, "u_h")?;
            let g = pos(p.gamma, "gamma")?;
            (m * u * u / g, BSource::EigenvalueBound)
        }
    };
    let n_min = (18.0 * b * (4.0 * m / delta).ln()).max(75.0 * m * (4.0 / delta).ln());
    let bound = (2.0 * (8.0 / delta).ln()).sqrt() * tau / n.sqrt()
        + 58.0 * (b * m * (8.0 * m / delta).ln() * (4.0 / delta).ln()).sqrt() * tau / n;
    Ok(OlsBound {
        bound,
        admissible: n >= n_min,
        b,
        b_source,
        n_min,
    })
}

pub fn lasso_bound(p: &BoundParams) -> Result<LassoBound> {
    let delta = p.delta()?;
    let tau = nonneg(p.tau, "tau")?;
    let n = count(p.n, "n")?;
    let m = count(p.m, "m")?;
    let u = pos(p.u_h, "u_h")?;
    let gs = pos(p.gamma_star, "gamma_star")?;
    let ell = count(p.ell_star, "ell_star")?;
    let xi = ell * u * u / gs;
    let log8m = (8.0 * m / delta).ln();
    let n_min = (8.0 * xi * xi * (8.0 * m * m / delta).ln()).max(128.0 * xi * log8m);
    let lambda_min = 7.0 * u * log8m.sqrt() * tau / n.sqrt();
    let head = (2.0 * (8.0 / delta).ln()).sqrt() * tau / n.sqrt();
    let general = |lam: f64| head + 68.0 * lam * ell * log8m.sqrt() * (u / gs) / n.sqrt();
    let bound_general = match p.lambda {
        Some(l) => Some(general(nonneg(Some(l), "lambda")?)),
        None => None,
    };
    let lambda_ok = p.lambda.is_none_or(|l| l >= lambda_min);
    Ok(LassoBound {
        bound_general,
        bound_at_min_lambda: head + 476.0 * ell * log8m * (u * u / gs) * tau / n,
        lambda_min,
        admissible: n >= n_min && lambda_ok,
        n_min,
    })
}

pub fn lambda_interval(p: &BoundParams) -> Result<LambdaInterval> {
    let delta = p.delta()?;
    let tau = nonneg(p.tau, "tau")?;
    let n = count(p.n, "n")?;
    let m = count(p.m, "m")?;
    let u = pos(p.u_h, "u_h")?;
    let g2 = pos(p.gamma_2star, "gamma_2star")?;
    let ell = count(p.ell_star, "ell_star")?;
    let bmin = nonneg(p.beta_min, "beta_min")?;
    let lo = 13.0 * u * (10.0 * m / delta).ln().sqrt() * tau / n.sqrt();
    let hi = g2 * bmin / (3.0 * ell.sqrt());
    let xi = ell * u * u / g2;
    let n_req = 70.0 * xi * xi * (10.0 * ell * m / delta).ln();
    Ok(LambdaInterval {
        lo,
        hi,
        nonempty: lo <= hi,
        n_admissible: Some(n >= n_req),
    })
}

pub fn lslasso_bound(p: &BoundParams) -> Result<LsLassoBound> {
    let delta = p.delta()?;
    let tau = nonneg(p.tau, "tau")?;
    let n = count(p.n, "n")?;
    let n_sub = count(p.n_sub, "N")?;
    if n_sub > n {
        return Err(CvError::invalid("N", format!("must not exceed n, got N = {n_sub} > n = {n}")));
    }
    let m = count(p.m, "m")?;
    let u = pos(p.u_h, "u_h")?;
    let g2 = pos(p.gamma_2star, "gamma_2star")?;
    let ell = count(p.ell_star, "ell_star")?;
    let bmin = nonneg(p.beta_min, "beta_min")?;
    let xi = ell * u * u / g2;
    let (b_star, b_star_source) = match p.b_star {
        Some(b) => (nonneg(Some(b), "b_star")?, BSource::Supplied),
        None => (xi, BSource::EigenvalueBound),
    };
    let n_sub_min = 75.0 * xi * xi * (20.0 * ell * m / delta).ln();
    let lambda_lo = 13.0 * u * (20.0 * m / delta).ln().sqrt() * tau / n_sub.sqrt();
    let lambda_hi = g2 * bmin / (3.0 * ell.sqrt());
    let lambda_ok = match p.lambda {
        Some(l) => l >= lambda_lo && l <= lambda_hi,
        None => lambda_lo <= lambda_hi,
    };
    let bound = (2.0 * (16.0 / delta).ln()).sqrt() * tau / n.sqrt()
        + 58.0 * (b_star * ell * (16.0 * ell / delta).ln() * (8.0 / delta).ln()).sqrt() * tau / n;
    Ok(LsLassoBound {
        bound,
        admissible: n_sub >= n_sub_min && lambda_ok,
        b_star,
        b_star_source,
        n_sub_min,
        lambda_lo,
        lambda_hi,
    })
}

/// Every bound that can be evaluated from `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: BoundParams,
    pub oracle: Option<f64>,
    pub ols: Option<OlsBound>,
    pub lasso: Option<LassoBound>,
    pub lambda_interval: Option<LambdaInterval>,
    pub lslasso: Option<LsLassoBound>,
    /// Evaluators skipped, with the reason.
    pub skipped: Vec<(String, String)>,
}

pub fn bound_report(p: &BoundParams) -> Result<BoundReport> {
    p.delta()?;
    let mut skipped = Vec::new();
    let oracle = keep(&mut skipped, "oracle", oracle_bound(p));
    let ols = keep(&mut skipped, "ols", ols_bound(p));
    let lasso = keep(&mut skipped, "lasso", lasso_bound(p));
    let interval = keep(&mut skipped, "lambda_interval", lambda_interval(p));
    let lslasso = keep(&mut skipped, "lslasso", lslasso_bound(p));
    Ok(BoundReport {
        params: p.clone(),
        oracle,
        ols,
        lasso,
        lambda_interval: interval,
        lslasso,
        skipped,
    })
}

fn keep<T>(skipped: &mut Vec<(String, String)>, name: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            skipped.push((name.to_string(), e.to_string()));
            None
        }
    }
}

/// `B` for a Legendre tensor basis: the exact value (attained at the corner
/// `(1, ..., 1)`) and the largest leverage seen on a random grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreB {
    pub exact: f64,
    pub grid_witness: f64,
}

pub fn legendre_b(spec: &BasisSpec, grid_points: usize, seed: u64) -> Result<LegendreB> {
    if spec.family() != Family::LegendreShifted {
        return Err(CvError::invalid("spec", "requires the Legendre family"));
    }
    let diag = diagnostics(spec);
    let exact = leverage(spec, &diag, &vec![1.0; spec.d()])?;
    let pts = sample_uniform_stream(spec.d(), grid_points.max(1), seed, 0);
    let h = build_design(spec, pts.view())?;
    let grid_witness = h
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(&diag.gram_diagonal).map(|(v, g)| v * v / g).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(LegendreB {
        exact,
        grid_witness,
    })
}

/// Synthetic model `f = c + beta*^T h + a e_J` where `e_J` is the univariate
/// basis function of index `J` in the first coordinate, chosen outside the
/// control set so it is orthogonal to every control.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageModel {
    pub basis: BasisSpec,
    pub intercept: f64,
    pub beta_star: Vec<f64>,
    pub residual_index: usize,
    pub residual_amplitude: f64,
}

impl CoverageModel {
    pub fn validate(&self) -> Result<()> {
        if self.beta_star.len() != self.basis.m() {
            return Err(CvError::DimensionMismatch {
                expected: self.basis.m(),
                got: self.beta_star.len(),
                context: "beta_star",
            });
        }
        if self.residual_index <= self.basis.k().max(self.basis.deg()) {
            return Err(CvError::invalid(
                "residual_index",
                "must exceed every univariate degree in the basis",
            ));
        }
        Ok(())
    }

    /// Half-width of the residual's range, its sub-Gaussian variance factor.
    pub fn tau(&self) -> f64 {
        let sup = match self.basis.family() {
            Family::LegendreShifted => 1.0,
            Family::Fourier => std::f64::consts::SQRT_2,
        };
        self.residual_amplitude.abs() * sup
    }

    /// Batch of `n` draws for replicate stream `stream`.
    pub fn batch(&self, n: usize, seed: u64, stream: u64) -> Result<SampleBatch> {
        let pts = sample_uniform_stream(self.basis.d(), n, seed, stream);
        let h = build_design(&self.basis, pts.view())?;
        let eval = match self.basis.family() {
            Family::LegendreShifted => crate::basis::legendre_eval,
            Family::Fourier => crate::basis::fourier_eval,
        };
        let bs = ndarray::ArrayView1::from(&self.beta_star[..]);
        let f = pts
            .rows()
            .into_iter()
            .zip(h.rows())
            .map(|(x, hr)| {
                Ok(self.intercept + hr.dot(&bs) + self.residual_amplitude * eval(self.residual_index, x[0])?)
            })
            .collect::<Result<Vec<f64>>>()?;
        SampleBatch::new(pts, f, h)
    }
}

/// Which inequality is checked; the estimator follows from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Oracle,
    Ols,
    /// LASSO at the penalty in the parameters.
    Lasso,
    /// LSLASSO with subsample `N` and the penalty in the parameters.
    LsLasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: usize,
    pub replicates: usize,
    pub fraction: f64,
    pub bound: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Half-width of the 95% Wilson interval.
    pub half_width: f64,
}

/// 95% Wilson score interval `(lo, hi, half_width)` for `k` successes in
/// `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64, f64) {
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0), half)
}

/// Fraction of replicates with `|alpha_hat - P(f)| <= bound`. Refuses
/// parameter sets outside the bound's admissible range. `params` must carry
/// `delta` and whatever the bound needs besides `tau`, `n` and `m`, which
/// are filled in from the model.
pub fn empirical_coverage(
    model: &CoverageModel,
    kind: BoundKind,
    params: &BoundParams,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<Coverage> {
    model.validate()?;
    if replicates == 0 {
        return Err(CvError::invalid("replicates", "must be at least 1"));
    }
    let mut p = params.clone();
    p.tau = Some(model.tau());
    p.n = Some(n);
    p.m = Some(model.basis.m());
    let (bound, admissible) = match kind {
        BoundKind::Oracle => (oracle_bound(&p)?, true),
        BoundKind::Ols => {
            let b = ols_bound(&p)?;
            (b.bound, b.admissible)
        }
        BoundKind::Lasso => {
            need(p.lambda, "lambda")?;
            let b = lasso_bound(&p)?;
            (b.bound_general.expect("lambda is set"), b.admissible)
        }
        BoundKind::LsLasso => {
            need(p.lambda, "lambda")?;
            let b = lslasso_bound(&p)?;
            (b.bound, b.admissible)
        }
    };
    if !admissible {
        return Err(CvError::Domain(format!(
            "{kind:?} bound is not claimed for these parameters (admissibility conditions fail)"
        )));
    }
    let hits = run_indexed(replicates, |r| {
        let batch = model.batch(n, seed, r as u64)?;
        let est = match kind {
            BoundKind::Oracle => oracle_estimate(batch.f_vals(), batch.design(), &model.beta_star)?,
            BoundKind::Ols => ols_estimate(&batch)?,
            BoundKind::Lasso => lasso_estimate(&batch, &Selector::Fixed { lambda: p.lambda.unwrap() })?,
            BoundKind::LsLasso => lslasso_estimate(
                &batch,
                p.n_sub.expect("checked by lslasso_bound"),
                &Selector::Fixed { lambda: p.lambda.unwrap() },
            )?,
        };
        Ok((est.alpha - model.intercept).abs() <= bound)
    })?;
    let covered = hits.iter().filter(|&&h| h).count();
    let (wilson_lo, wilson_hi, half_width) = wilson_interval(covered, replicates);
    Ok(Coverage {
        covered,
        replicates,
        fraction: covered as f64 / replicates as f64,
        bound,
        wilson_lo,
        wilson_hi,
        half_width,
    })
}
