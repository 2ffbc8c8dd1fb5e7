use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use qsrs_core::interval::{Interval, UncertainBox};
use qsrs_core::problems::{pressure_vessel_problem, three_hump_problem};
use qsrs_core::regression::{lars_lasso_path, RegressionProblem};
use qsrs_core::surrogate::{build_qsrs, worst_case_evaluation};
use rand::{Rng, SeedableRng};

fn lars(c: &mut Criterion) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for (m, n) in [(30, 90), (100, 300)] {
        let x = Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let prob = RegressionProblem::new(x, y).unwrap();
        c.bench_function(&format!("lars_path_{m}x{n}"), |b| b.iter(|| lars_lasso_path(black_box(&prob)).unwrap()));
    }
}

fn surrogate(c: &mut Criterion) {
    let bx = UncertainBox::new(vec![Interval::new(-10.0, 10.0).unwrap(); 2]).unwrap();
    let booth = |x: &[f64]| (x[0] + 2.0 * x[1] - 7.0).powi(2) + (2.0 * x[0] + x[1] - 5.0).powi(2);
    c.bench_function("build_qsrs_2d_m30", |b| b.iter(|| build_qsrs(booth, black_box(&bx), 30).unwrap()));

    let th = three_hump_problem(false);
    c.bench_function("worst_case_three_hump_m30", |b| b.iter(|| worst_case_evaluation(&th, black_box(&[1.0, -2.0]), 30).unwrap()));

    let pv = pressure_vessel_problem();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("worst_case_pressure_vessel_m100", |b| {
        b.iter(|| worst_case_evaluation(&pv, black_box(&[2.2254, 1.2458, 93.497, 100.2317]), 100).unwrap())
    });
    g.finish();
}

criterion_group!(benches, lars, surrogate);
criterion_main!(benches);
