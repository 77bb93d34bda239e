use cvmc::basis::Family;
use cvmc::estimators::{eval_rows, mc_estimate, Selector};
use cvmc::harness::{emit_report, run_experiment, sample_uniform, BasisGrid, ReportFormat};
use cvmc::qmc::halton_points;
use cvmc::{ExperimentConfig, ExperimentReport, MethodName, Synthetic};

fn phi_config(methods: Vec<MethodName>, degs: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        integrand: Synthetic::Phi { d: 3 },
        basis: BasisGrid {
            family: Family::LegendreShifted,
            k: 12,
            degs,
            order: None,
        },
        n: 10_000,
        n_sub: None,
        replicates: 100,
        master_seed: 11,
        methods,
        selector: Selector::dichotomic(),
        output: None,
    }
}

#[test]
fn mc_mse_matches_analytic_variance() {
    // the variance of phi is 1/2, so the MC mse is 0.5 / n
    let r = run_experiment(&phi_config(vec![MethodName::Mc], vec![3])).unwrap();
    let mse = r.rows[0].mse;
    assert!(mse > 2.5e-5 && mse < 1e-4, "{mse}");
}

#[test]
fn ols_efficiency_at_m19() {
    let r = run_experiment(&phi_config(vec![MethodName::Ols], vec![3])).unwrap();
    let e = r.efficiency(MethodName::Ols, 19).unwrap();
    assert!((856.0 / 3.0..=856.0 * 3.0).contains(&e), "{e}");
}

#[test]
fn halton_beats_average_mc_error() {
    let phi = Synthetic::Phi { d: 3 };
    let halton = mc_estimate(&eval_rows(&phi, halton_points(3, 10_000).unwrap().view()).unwrap()).unwrap();
    let mean_err = (0..100)
        .map(|s| {
            let f = eval_rows(&phi, sample_uniform(3, 10_000, s).view()).unwrap();
            (mc_estimate(&f).unwrap().alpha - 1.0).abs()
        })
        .sum::<f64>()
        / 100.0;
    assert!((halton.alpha - 1.0).abs() < mean_err);
}

#[test]
fn control_variates_reduce_mse_in_degree() {
    let mut cfg = phi_config(vec![MethodName::Mc, MethodName::Ols, MethodName::Lslassox], vec![1, 3, 5]);
    cfg.n = 2000;
    cfg.replicates = 20;
    let r = run_experiment(&cfg).unwrap();
    let ols: Vec<f64> = [3, 19, 55].iter().map(|&m| r.row(MethodName::Ols, m).unwrap().mse).collect();
    assert!(ols[0] < r.rows[0].mse && ols[1] < ols[0] && ols[2] < ols[1], "{ols:?}");
    assert!(r.efficiency(MethodName::Lslassox, 55).unwrap() > 100.0);
}

#[test]
fn reports_round_trip_through_disk() {
    let mut cfg = phi_config(vec![MethodName::Mc, MethodName::Halton, MethodName::Lasso], vec![1]);
    cfg.n = 500;
    cfg.replicates = 3;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(
        r.rows.iter().map(|row| (row.method, row.m)).collect::<Vec<_>>(),
        vec![(MethodName::Mc, 0), (MethodName::Halton, 0), (MethodName::Lasso, 3)]
    );
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, dir.path(), ReportFormat::Json).unwrap();
    let back: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(back, r);
    let cfg_back: ExperimentConfig = serde_json::from_value(back.config).unwrap();
    assert_eq!(cfg_back, cfg);
}
