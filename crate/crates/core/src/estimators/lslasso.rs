use super::lasso::LassoConfig;
use super::ols::ols_on_columns;
use super::selection::{select, Selector};
use super::{mc_estimate, support, EstimateResult, Flag, Method, SampleBatch};
use crate::error::{CvError, Result};

/// Subsample size of the LSLASSOX variant, `floor(15 sqrt(n))` capped at `n`.
pub fn lslassox_subsample(n: usize) -> usize {
    ((15.0 * (n as f64).sqrt()).floor() as usize).clamp(1, n.max(1))
}

/// LASSO control variates: penalty chosen on all `n` rows, then
/// `alpha = P_n(f) - beta^T P_n(h)` with the shrunken coefficients.
pub fn lasso_estimate(batch: &SampleBatch, selector: &Selector) -> Result<EstimateResult> {
    let sel = select(batch, batch.n(), selector, &LassoConfig::default())?;
    let mut res = EstimateResult::from_beta(batch, sel.beta, Method::Lasso);
    res.iterations = sel.sweeps;
    res.lambda_used = Some(sel.lambda);
    res.subsample_n = Some(batch.n());
    res.flags = sel.flags;
    Ok(res)
}

/// Select controls by LASSO on the first `n_sub` rows, then fit OLS on the
/// selected controls over all rows. An empty selection gives the plain
/// sample mean.
pub fn lslasso_estimate(batch: &SampleBatch, n_sub: usize, selector: &Selector) -> Result<EstimateResult> {
    if n_sub == 0 || n_sub > batch.n() {
        return Err(CvError::invalid("N", format!("must be in 1..={}, got {n_sub}", batch.n())));
    }
    let sel = select(batch, n_sub, selector, &LassoConfig::default())?;
    let cols = support(&sel.beta);
    let mut res = if cols.is_empty() {
        let mut r = mc_estimate(batch.f_vals())?;
        r.beta = vec![0.0; batch.m()];
        r.flags.push(Flag::EmptySupportFallback);
        r
    } else {
        ols_on_columns(batch, &cols)?
    };
    res.method = Method::LsLasso;
    res.iterations += sel.sweeps;
    res.lambda_used = Some(sel.lambda);
    res.subsample_n = Some(n_sub);
    for f in sel.flags {
        if !res.flags.contains(&f) {
            res.flags.push(f);
        }
    }
    Ok(res)
}
