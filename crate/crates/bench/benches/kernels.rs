use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use univalent_bench::{expr, medium_grid, sample_points, small_grid};
use univalent_core::criteria::{check_becker, check_main_t2, CriterionParams};
use univalent_core::expr::eval;
use univalent_core::extension::{beltrami_estimate, BeckerExtension, T6Chain, BELTRAMI_STEP};
use univalent_core::loewner::qc_bound_k;
use univalent_core::operators::{operator_g_alpha, QuadratureConfig};
use univalent_core::oracle::{injectivity_test, preimage_count, DEFAULT_COLLISION_TOL};
use univalent_core::AnalyticTriple;

fn expression_eval(c: &mut Criterion) {
    let f = expr("z*exp(0.3*z)/(1 - 0.2*z)^2");
    let d = f.derivative();
    let pts = sample_points(256);
    c.bench_function("eval 256 points", |b| {
        b.iter(|| pts.iter().map(|&z| eval(&f, z).unwrap()).sum::<Complex64>())
    });
    c.bench_function("eval derivative 256 points", |b| {
        b.iter(|| pts.iter().map(|&z| eval(&d, z).unwrap()).sum::<Complex64>())
    });
}

fn operator(c: &mut Criterion) {
    let f = expr("z + 0.1*z^2");
    let g = expr("z*exp(0.1*z)");
    let q = QuadratureConfig::default();
    let z = Complex64::new(0.6, 0.3);
    c.bench_function("operator integer alpha", |b| {
        b.iter(|| operator_g_alpha(&f, &g, black_box(Complex64::new(2.0, 0.0)), z, &q).unwrap())
    });
    c.bench_function("operator complex alpha", |b| {
        b.iter(|| operator_g_alpha(&f, &g, black_box(Complex64::new(1.5, 0.5)), z, &q).unwrap())
    });
}

fn criteria(c: &mut Criterion) {
    let triple = AnalyticTriple::new(expr("z + 0.1*z^2"), expr("z"), expr("1")).unwrap();
    let p = CriterionParams::default();
    let grid = medium_grid();
    c.bench_function("check T2 32x64", |b| b.iter(|| check_main_t2(&triple, &p, &grid).unwrap()));
    let f = expr("z/(1 - z)");
    c.bench_function("check becker 32x64", |b| b.iter(|| check_becker(&f, 2.0, &grid).unwrap()));
    c.bench_function("qc bound", |b| {
        b.iter(|| qc_bound_k(black_box(Complex64::new(1.0, 1.0)), black_box(0.2)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let f = expr("z + 0.3*z^2");
    let grid = small_grid();
    c.bench_function("injectivity 16x32", |b| {
        b.iter(|| injectivity_test(&f, &grid, DEFAULT_COLLISION_TOL).unwrap())
    });
    c.bench_function("preimage count 1024 nodes", |b| {
        b.iter(|| preimage_count(&f, black_box(Complex64::new(0.2, 0.1)), 0.9, 1024).unwrap())
    });
}

fn extension(c: &mut Criterion) {
    let f = expr("z + 0.2*z^2");
    let ext = BeckerExtension::new(T6Chain::new(&f, expr("z"), 1.0, QuadratureConfig::default()));
    c.bench_function("beltrami sample", |b| {
        b.iter(|| beltrami_estimate(&ext, black_box(Complex64::new(-1.5, 0.4)), BELTRAMI_STEP).unwrap())
    });
}

criterion_group!(benches, expression_eval, operator, criteria, oracle, extension);
criterion_main!(benches);
