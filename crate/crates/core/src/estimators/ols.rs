use super::{EstimateResult, Flag, Method, SampleBatch};
use crate::error::{CvError, Result};
use crate::linalg::min_norm_lstsq;

/// Least-squares control variates: `beta` minimizes `||f_c - H_c beta||`,
/// taking the minimal-norm solution when `H_c` is rank deficient.
pub fn ols_estimate(batch: &SampleBatch) -> Result<EstimateResult> {
    let cols: Vec<usize> = (0..batch.m()).collect();
    let mut res = ols_on_columns(batch, &cols)?;
    res.method = Method::Ols;
    Ok(res)
}

/// OLS restricted to the controls in `cols`; `beta` is reported in full
/// `m` coordinates with zeros elsewhere.
pub fn ols_on_columns(batch: &SampleBatch, cols: &[usize]) -> Result<EstimateResult> {
    if let Some(&bad) = cols.iter().find(|&&c| c >= batch.m()) {
        return Err(CvError::invalid("cols", format!("column {bad} out of range")));
    }
    let hc = batch.h_centered();
    let sol = min_norm_lstsq(batch.n(), cols.len(), |i, j| hc[[i, cols[j]]], batch.f_centered())?;
    let mut beta = vec![0.0; batch.m()];
    for (&c, &b) in cols.iter().zip(&sol.beta) {
        beta[c] = b;
    }
    let mut res = EstimateResult::from_beta(batch, beta, Method::Ols);
    res.iterations = 1;
    if sol.rank < cols.len() {
        res.flags.push(Flag::RankDeficient);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisSpec, Family};
    use crate::harness::sample_uniform;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn integrates_controls_and_constants_exactly() {
        let spec = BasisSpec::new(Family::LegendreShifted, 2, 3, 3).unwrap();
        let pts = sample_uniform(2, 60, 3);
        let h = crate::basis::build_design(&spec, pts.view()).unwrap();
        for j in 0..spec.m() {
            let f = h.column(j).to_vec();
            let b = SampleBatch::from_design(f, h.clone()).unwrap();
            let r = ols_estimate(&b).unwrap();
            assert_abs_diff_eq!(r.alpha, 0.0, epsilon = 1e-12);
        }
        let b = SampleBatch::from_design(vec![2.5; 60], h).unwrap();
        let r = ols_estimate(&b).unwrap();
        assert_abs_diff_eq!(r.alpha, 2.5, epsilon = 1e-12);
        assert!(r.beta.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let h = Array2::from_shape_fn((10, 3), |(i, j)| if j == 2 { i as f64 } else { (i * (j + 1)) as f64 });
        // column 0 and column 2 coincide
        let f: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let b = SampleBatch::from_design(f, h).unwrap();
        let r = ols_estimate(&b).unwrap();
        assert!(r.has_flag(Flag::RankDeficient));
        assert_abs_diff_eq!(r.beta[0], r.beta[2], epsilon = 1e-10);
    }

    #[test]
    fn out_of_range_column() {
        let b = SampleBatch::from_design(vec![1.0, 2.0], Array2::zeros((2, 1))).unwrap();
        assert!(ols_on_columns(&b, &[1]).is_err());
        let r = ols_on_columns(&b, &[]).unwrap();
        assert_eq!(r.alpha, 1.5);
    }
}
