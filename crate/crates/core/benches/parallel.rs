use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geomech::euler_poincare::{discrete_action_gradient, integrate_ep, smooth_variations, EPState, Variation};
use geomech::models::spline2;
use geomech::par;
use geomech::solvers::{fd_jacobian, fd_jacobian_seq, IntegratorConfig, ShootingProblem, DEFAULT_FD_EPS};
use geomech::{AlgebraVector, Chirality, GroupElement, Inertia, LieAlgebra};
use nalgebra::DVector;

fn shooting_problem(dt: f64) -> ShootingProblem {
    let alg = LieAlgebra::so3();
    let model = spline2(
        &alg,
        Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
        false,
        0.2,
        Chirality::Right,
    )
    .unwrap();
    let g0 = alg.exp(&AlgebraVector::from_slice(&[0.3, -0.2, 0.5])).unwrap();
    let g1 = alg.exp(&AlgebraVector::from_slice(&[-0.6, 0.4, 0.9])).unwrap();
    let mut p = ShootingProblem::new(
        model,
        g0,
        g1,
        AlgebraVector::from_slice(&[0.2, 0.0, -0.1]),
        AlgebraVector::from_slice(&[0.0, 0.3, 0.1]),
        1.0,
    );
    p.config = IntegratorConfig::with_dt(dt);
    p
}

fn shooting_jacobian(c: &mut Criterion) {
    let mut group = c.benchmark_group("shooting_jacobian");
    group.sample_size(20);
    let unknowns = DVector::from_column_slice(&[0.5, -0.2, 0.1, 0.0, 0.3, -0.4]);
    for dt in [4e-3, 1e-3] {
        let p = shooting_problem(dt);
        let residual = |x: &DVector<f64>| p.residual(x);
        group.bench_with_input(BenchmarkId::new("seq", dt), &unknowns, |b, x| {
            b.iter(|| fd_jacobian_seq(residual, black_box(x), DEFAULT_FD_EPS).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("par", dt), &unknowns, |b, x| {
            b.iter(|| fd_jacobian(residual, black_box(x), DEFAULT_FD_EPS).unwrap())
        });
    }
    group.finish();
}

fn variation_sweep(c: &mut Criterion) {
    let alg = LieAlgebra::so3();
    let model = spline2(
        &alg,
        Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
        false,
        0.2,
        Chirality::Left,
    )
    .unwrap();
    let jet = [
        AlgebraVector::from_slice(&[0.4, -0.3, 0.2]),
        AlgebraVector::from_slice(&[0.1, 0.2, -0.1]),
        AlgebraVector::from_slice(&[-0.2, 0.0, 0.3]),
    ];
    let dt = 1e-3;
    let st = EPState::from_full_jet(&model, GroupElement::identity(&alg), &jet).unwrap();
    let path = integrate_ep(&model, &st, 1.0, &IntegratorConfig::with_dt(dt))
        .unwrap()
        .g;

    let mut group = c.benchmark_group("variation_sweep");
    group.sample_size(20);
    for count in [8usize, 32] {
        let batches: Vec<Vec<Variation>> = (0..count as u64)
            .map(|s| smooth_variations(3, path.len(), 1, s))
            .collect();
        let gradient = |v: &Vec<Variation>| discrete_action_gradient(&model, &path, dt, v).unwrap();
        group.bench_with_input(BenchmarkId::new("seq", count), &batches, |b, vs| {
            b.iter(|| par::map_seq(black_box(vs), gradient))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", count), &batches, |b, vs| {
            b.iter(|| par::map_par(black_box(vs), gradient))
        });
    }
    group.finish();
}

criterion_group!(benches, shooting_jacobian, variation_sweep);
criterion_main!(benches);
