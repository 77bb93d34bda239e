//! Control-variate estimators of an integral from one batch of draws.
//!
//! Every estimator returns `alpha = P_n(f) - beta^T P_n(h)` for some
//! coefficient vector `beta`; they differ only in how `beta` is chosen.

mod lasso;
mod lslasso;
mod ols;
mod selection;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use lasso::{
    lambda_max, lasso_cd, soft_threshold, CdStats, LassoConfig, LassoProblem,
};
pub use lslasso::{lasso_estimate, lslasso_estimate, lslassox_subsample};
pub use ols::{ols_estimate, ols_on_columns};
pub use selection::{
    dichotomic_search, kfold_cv, log_grid, select, support_target, Selection, Selector, DEFAULT_C1, DEFAULT_C2,
};

use crate::basis::{build_design, BasisSpec};
use crate::error::{CvError, Result};
use crate::integrands::Integrand;

/// Draws, integrand values and control values, with their centered forms.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    points: Array2<f64>,
    f_vals: Vec<f64>,
    h: Array2<f64>,
    f_mean: f64,
    h_mean: Vec<f64>,
    f_c: Vec<f64>,
    h_c: Array2<f64>,
    col_norms: Vec<f64>,
}

impl SampleBatch {
    /// Build from integrand values and the `n x m` design. `points` may have
    /// zero columns when the draws themselves are not needed.
    pub fn new(points: Array2<f64>, f_vals: Vec<f64>, h: Array2<f64>) -> Result<Self> {
        let n = f_vals.len();
        if n == 0 {
            return Err(CvError::invalid("f_vals", "at least one draw is required"));
        }
        if h.nrows() != n || points.nrows() != n {
            return Err(CvError::DimensionMismatch {
                expected: n,
                got: if h.nrows() != n { h.nrows() } else { points.nrows() },
                context: "rows of design/points vs number of values",
            });
        }
        if f_vals.iter().any(|v| !v.is_finite()) {
            return Err(CvError::NonFinite("integrand values"));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(CvError::NonFinite("design matrix"));
        }
        let f_mean = mean(&f_vals);
        let f_c = f_vals.iter().map(|v| v - f_mean).collect();
        let h_mean: Vec<f64> = h
            .columns()
            .into_iter()
            .map(|c| c.sum() / n as f64)
            .collect();
        let mut h_c = h.clone();
        for (mut col, mu) in h_c.axis_iter_mut(Axis(1)).zip(&h_mean) {
            col -= *mu;
        }
        let col_norms = h_c.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
        Ok(Self {
            points,
            f_vals,
            h,
            f_mean,
            h_mean,
            f_c,
            h_c,
            col_norms,
        })
    }

    /// Batch without the draws, from values and design only.
    pub fn from_design(f_vals: Vec<f64>, h: Array2<f64>) -> Result<Self> {
        let n = f_vals.len();
        Self::new(Array2::zeros((n, 0)), f_vals, h)
    }

    /// Evaluate `integrand` and the controls of `spec` on unit-cube `points`.
    pub fn from_integrand(
        integrand: &dyn Integrand,
        spec: &BasisSpec,
        points: Array2<f64>,
    ) -> Result<Self> {
        let f_vals = eval_rows(integrand, points.view())?;
        let h = build_design(spec, points.view())?;
        Self::new(points, f_vals, h)
    }

    pub fn n(&self) -> usize {
        self.f_vals.len()
    }

    pub fn m(&self) -> usize {
        self.h.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn f_vals(&self) -> &[f64] {
        &self.f_vals
    }

    pub fn design(&self) -> ArrayView2<'_, f64> {
        self.h.view()
    }

    pub fn f_mean(&self) -> f64 {
        self.f_mean
    }

    pub fn h_mean(&self) -> &[f64] {
        &self.h_mean
    }

    pub fn f_centered(&self) -> &[f64] {
        &self.f_c
    }

    pub fn h_centered(&self) -> ArrayView2<'_, f64> {
        self.h_c.view()
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    /// `P_n(f) - beta^T P_n(h)`.
    pub fn alpha_for(&self, beta: &[f64]) -> f64 {
        self.f_mean - beta.iter().zip(&self.h_mean).map(|(b, h)| b * h).sum::<f64>()
    }
}

/// Integrand values at each row of `points` (unit-cube coordinates).
pub fn eval_rows(integrand: &dyn Integrand, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if points.ncols() != integrand.dim() {
        return Err(CvError::DimensionMismatch {
            expected: integrand.dim(),
            got: points.ncols(),
            context: "points columns vs integrand dimension",
        });
    }
    let mut scratch = Vec::with_capacity(points.ncols());
    let mut row = Vec::with_capacity(points.ncols());
    points
        .rows()
        .into_iter()
        .map(|r| {
            row.clear();
            row.extend(r.iter().copied());
            integrand.eval_unit(&row, &mut scratch)
        })
        .collect()
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Oracle,
    Ols,
    Lasso,
    LsLasso,
}

/// Conditions worth reporting alongside an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The centered design did not have full column rank.
    RankDeficient,
    /// No control was selected; the estimate is the plain sample mean.
    EmptySupportFallback,
    /// The support-size target could not be reached by any penalty.
    TargetUnreachable,
    /// The penalty search stopped at its step limit outside the target.
    MaxStepsReached,
    /// Coordinate descent hit its sweep limit before the tolerance.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub alpha: f64,
    #[serde(skip)]
    pub beta: Vec<f64>,
    pub active_set: Vec<usize>,
    pub method: Method,
    pub iterations: usize,
    pub lambda_used: Option<f64>,
    #[serde(rename = "N")]
    pub subsample_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
}

impl EstimateResult {
    pub(crate) fn from_beta(batch: &SampleBatch, beta: Vec<f64>, method: Method) -> Self {
        let active_set = support(&beta);
        Self {
            alpha: batch.alpha_for(&beta),
            beta,
            active_set,
            method,
            iterations: 0,
            lambda_used: None,
            subsample_n: None,
            flags: Vec::new(),
        }
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

pub(crate) fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Plain sample mean.
pub fn mc_estimate(f_vals: &[f64]) -> Result<EstimateResult> {
    if f_vals.is_empty() {
        return Err(CvError::invalid("f_vals", "at least one draw is required"));
    }
    Ok(EstimateResult {
        alpha: mean(f_vals),
        beta: Vec::new(),
        active_set: Vec::new(),
        method: Method::Mc,
        iterations: 0,
        lambda_used: None,
        subsample_n: None,
        flags: Vec::new(),
    })
}

/// `P_n(f - beta*^T h)` for externally known coefficients.
pub fn oracle_estimate(f_vals: &[f64], h: ArrayView2<'_, f64>, beta_star: &[f64]) -> Result<EstimateResult> {
    if f_vals.is_empty() {
        return Err(CvError::invalid("f_vals", "at least one draw is required"));
    }
    if h.nrows() != f_vals.len() {
        return Err(CvError::DimensionMismatch {
            expected: f_vals.len(),
            got: h.nrows(),
            context: "design rows",
        });
    }
    if h.ncols() != beta_star.len() {
        return Err(CvError::DimensionMismatch {
            expected: h.ncols(),
            got: beta_star.len(),
            context: "oracle coefficients",
        });
    }
    let b = ndarray::ArrayView1::from(beta_star);
    let n = f_vals.len() as f64;
    let alpha = f_vals
        .iter()
        .zip(h.rows())
        .map(|(f, row)| f - row.dot(&b))
        .sum::<f64>()
        / n;
    Ok(EstimateResult {
        alpha,
        beta: beta_star.to_vec(),
        active_set: support(beta_star),
        method: Method::Oracle,
        iterations: 0,
        lambda_used: None,
        subsample_n: None,
        flags: Vec::new(),
    })
}
