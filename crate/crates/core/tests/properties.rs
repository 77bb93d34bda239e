use cvmc::basis::{build_design, BasisSpec, Family};
use cvmc::bounds::{lasso_bound, ols_bound, oracle_bound, BoundParams};
use cvmc::estimators::{lasso_cd, ols_estimate, soft_threshold, LassoConfig, LassoProblem, SampleBatch};
use cvmc::harness::sample_uniform;
use cvmc::qmc::halton_points;
use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_design(n: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, m), |_| rng.gen::<f64>() * 2.0 - 1.0)
}

/// Upper-triangular mixing matrix with unit-ish diagonal; condition number
/// stays well under 1e3 for the sizes used here.
fn mixing(m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    Array2::from_shape_fn((m, m), |(i, j)| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0 + rng.gen::<f64>(),
        std::cmp::Ordering::Less => 0.3 * (rng.gen::<f64>() - 0.5),
        std::cmp::Ordering::Greater => 0.0,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ols_invariant_under_control_mixing(seed in 0u64..10_000, m in 1usize..8, n in 40usize..120) {
        let h = random_design(n, m, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let f: Vec<f64> = (0..n).map(|i| h[[i, 0]].exp() + rng.gen::<f64>()).collect();
        let a = ols_estimate(&SampleBatch::from_design(f.clone(), h.clone()).unwrap()).unwrap();
        let mixed = h.dot(&mixing(m, seed));
        let b = ols_estimate(&SampleBatch::from_design(f, mixed).unwrap()).unwrap();
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-10 * (1.0 + a.alpha.abs()));
    }

    #[test]
    fn ols_affine_in_f(seed in 0u64..10_000, c in -5.0f64..5.0, s in 0.1f64..10.0) {
        let h = random_design(60, 4, seed);
        let f: Vec<f64> = (0..60).map(|i| (3.0 * h[[i, 1]]).sin()).collect();
        let g: Vec<f64> = f.iter().map(|v| s * v + c).collect();
        let a = ols_estimate(&SampleBatch::from_design(f, h.clone()).unwrap()).unwrap().alpha;
        let b = ols_estimate(&SampleBatch::from_design(g, h).unwrap()).unwrap().alpha;
        prop_assert!((b - (s * a + c)).abs() <= 1e-10 * (1.0 + b.abs()));
    }

    #[test]
    fn ols_exact_on_control_span(
        seed in 0u64..10_000,
        c in -3.0f64..3.0,
        coef in proptest::collection::vec(-2.0f64..2.0, 9),
    ) {
        let spec = BasisSpec::new(Family::LegendreShifted, 2, 3, 3).unwrap();
        prop_assert_eq!(spec.m(), 9);
        let pts = sample_uniform(2, 200, seed);
        let h = build_design(&spec, pts.view()).unwrap();
        let f: Vec<f64> = h.rows().into_iter().map(|r| c + r.iter().zip(&coef).map(|(x, a)| x * a).sum::<f64>()).collect();
        let est = ols_estimate(&SampleBatch::new(pts, f, h).unwrap()).unwrap();
        prop_assert!((est.alpha - c).abs() <= 1e-10);
    }

    #[test]
    fn support_grows_along_warm_path(seed in 0u64..10_000) {
        // nearly orthogonal controls: shifted Legendre on many points
        let spec = BasisSpec::new(Family::LegendreShifted, 1, 12, 12).unwrap();
        let pts = sample_uniform(1, 2000, seed);
        let h = build_design(&spec, pts.view()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..12).map(|j| (rng.gen::<f64>() - 0.5) / (1.0 + j as f64)).collect();
        let f: Vec<f64> = h.rows().into_iter().map(|r| r.iter().zip(&w).map(|(x, a)| x * a).sum::<f64>() + 0.01 * (rng.gen::<f64>() - 0.5)).collect();
        let batch = SampleBatch::from_design(f, h).unwrap();
        let prob = LassoProblem::from_batch(&batch, 2000).unwrap();
        let lmax = prob.lambda_max();
        let cfg = LassoConfig { tol: 1e-10, max_sweeps: 100_000, record_objective: false };
        let mut warm = vec![0.0; 12];
        let mut last = 0;
        for i in 0..24 {
            let lambda = lmax * 0.75f64.powi(i);
            let (b, _) = prob.solve(lambda, &cfg, Some(&warm)).unwrap();
            let l = b.iter().filter(|v| **v != 0.0).count();
            prop_assert!(l >= last, "support shrank from {} to {} at lambda {}", last, l, lambda);
            last = l;
            warm = b;
        }
    }

    #[test]
    fn objective_never_increases(seed in 0u64..10_000, m in 2usize..12, frac in 0.01f64..0.9) {
        let h = random_design(50, m, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let f: Vec<f64> = (0..50).map(|i| h[[i, 0]] - 2.0 * h[[i, m - 1]] + rng.gen::<f64>()).collect();
        let batch = SampleBatch::from_design(f, h).unwrap();
        let prob = LassoProblem::from_batch(&batch, 50).unwrap();
        let cfg = LassoConfig { record_objective: true, ..LassoConfig::default() };
        let (_, stats) = prob.solve(frac * prob.lambda_max(), &cfg, None).unwrap();
        prop_assert!(!stats.objective_trace.is_empty());
        for w in stats.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn lasso_at_lambda_max_is_zero(seed in 0u64..10_000, m in 1usize..10) {
        let h = random_design(40, m, seed);
        let f: Vec<f64> = h.rows().into_iter().map(|r| r.sum().powi(2)).collect();
        let batch = SampleBatch::from_design(f, h).unwrap();
        let lmax = cvmc::estimators::lambda_max(&batch, 40).unwrap();
        let (beta, _) = lasso_cd(&batch, lmax * 1.0001, 1000, 1e-9).unwrap();
        prop_assert!(beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn soft_threshold_is_shrinkage(z in -10.0f64..10.0, lambda in 0.0f64..5.0) {
        let s = soft_threshold(z, lambda);
        prop_assert!(s.abs() <= z.abs());
        prop_assert!(s == 0.0 || s.signum() == z.signum());
        prop_assert!((z - s).abs() <= lambda + 1e-15);
        if z.abs() > lambda {
            prop_assert!(((z - s).abs() - lambda).abs() <= 1e-12);
        }
    }

    #[test]
    fn bounds_decrease_in_n(n in 100usize..1_000_000, tau in 0.01f64..10.0, delta in 0.01f64..0.99) {
        let p = |n: usize| BoundParams {
            tau: Some(tau),
            n: Some(n),
            m: Some(20),
            delta: Some(delta),
            gamma: Some(0.05),
            gamma_star: Some(0.1),
            u_h: Some(1.0),
            ell_star: Some(3),
            lambda: Some(0.1),
            ..BoundParams::default()
        };
        let (a, b) = (p(n), p(2 * n));
        prop_assert!(oracle_bound(&b).unwrap() < oracle_bound(&a).unwrap());
        prop_assert!(ols_bound(&b).unwrap().bound < ols_bound(&a).unwrap().bound);
        let (la, lb) = (lasso_bound(&a).unwrap(), lasso_bound(&b).unwrap());
        prop_assert!(lb.bound_at_min_lambda < la.bound_at_min_lambda);
        prop_assert!(lb.bound_general.unwrap() < la.bound_general.unwrap());
        prop_assert!(lb.lambda_min < la.lambda_min);
    }

    #[test]
    fn halton_stays_in_open_cube(d in 1usize..10, n in 1usize..500) {
        let pts = halton_points(d, n).unwrap();
        prop_assert_eq!(pts.dim(), (n, d));
        prop_assert!(pts.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn design_columns_match_pointwise_evaluation(seed in 0u64..10_000) {
        let spec = BasisSpec::new(Family::LegendreShifted, 3, 4, 4).unwrap();
        let pts = sample_uniform(3, 20, seed);
        let h = build_design(&spec, pts.view()).unwrap();
        for (i, x) in pts.axis_iter(Axis(0)).enumerate() {
            for (j, idx) in spec.indices().iter().enumerate() {
                let v = cvmc::basis::eval_control(&spec, idx, x.as_slice().unwrap()).unwrap();
                prop_assert!((v - h[[i, j]]).abs() <= 1e-12);
            }
        }
    }
}
