use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cvmc::basis::{build_design, BasisSpec, Family};
use cvmc::estimators::{lasso_cd, lambda_max, lasso_estimate, lslasso_estimate, ols_estimate, SampleBatch, Selector};
use cvmc::harness::sample_uniform;
use cvmc::qmc::halton_points;
use cvmc::Synthetic;

fn phi_batch(deg: usize, n: usize) -> SampleBatch {
    let spec = BasisSpec::new(Family::LegendreShifted, 3, 12, deg).unwrap();
    SampleBatch::from_integrand(&Synthetic::Phi { d: 3 }, &spec, sample_uniform(3, n, 1)).unwrap()
}

fn design(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_design");
    for deg in [3, 5, 10] {
        let spec = BasisSpec::new(Family::LegendreShifted, 3, 12, deg).unwrap();
        let pts = sample_uniform(3, 2000, 1);
        g.bench_with_input(BenchmarkId::new("legendre_d3_n2000", spec.m()), &spec, |b, spec| {
            b.iter(|| build_design(spec, black_box(pts.view())).unwrap())
        });
    }
    g.finish();
}

fn ols(c: &mut Criterion) {
    let mut g = c.benchmark_group("ols");
    g.sample_size(10);
    for deg in [3, 5, 10] {
        let batch = phi_batch(deg, 2000);
        g.bench_with_input(BenchmarkId::new("phi_n2000", batch.m()), &batch, |b, batch| {
            b.iter(|| ols_estimate(black_box(batch)).unwrap())
        });
    }
    g.finish();
}

fn lasso(c: &mut Criterion) {
    let mut g = c.benchmark_group("lasso_cd");
    g.sample_size(10);
    for deg in [5, 10] {
        let batch = phi_batch(deg, 2000);
        let lambda = 1e-3 * lambda_max(&batch, batch.n()).unwrap();
        g.bench_with_input(BenchmarkId::new("phi_n2000", batch.m()), &batch, |b, batch| {
            b.iter(|| lasso_cd(black_box(batch), lambda, 1000, 1e-7).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("selection");
    g.sample_size(10);
    let batch = phi_batch(10, 2000);
    let sel = Selector::dichotomic();
    g.bench_function("lasso_dichotomic_m285", |b| b.iter(|| lasso_estimate(black_box(&batch), &sel).unwrap()));
    g.bench_function("lslasso_dichotomic_m285_N700", |b| {
        b.iter(|| lslasso_estimate(black_box(&batch), 700, &sel).unwrap())
    });
    g.finish();
}

fn halton(c: &mut Criterion) {
    c.bench_function("halton_d8_n10000", |b| b.iter(|| halton_points(black_box(8), 10_000).unwrap()));
}

criterion_group!(benches, design, ols, lasso, halton);
criterion_main!(benches);
