use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use thickscape::dynamics::random_seeds;
use thickscape::sphere::SphericalHarmonicField;
use thickscape::{analyze, iterate_orbit, OrbitParams, ReturnMapSystem};

fn equilibria(c: &mut Criterion) {
    let ellipse = ReturnMapSystem::circle_in_ellipse(2.0, 1.5).unwrap();
    let sphere = ReturnMapSystem::spherical(SphericalHarmonicField::zonal_quadratic(1.0, 0.1)).unwrap();

    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    group.bench_function("ellipse", |b| b.iter(|| analyze(black_box(&ellipse)).unwrap()));
    group.bench_function("zonal-s2", |b| b.iter(|| analyze(black_box(&sphere)).unwrap()));
    group.finish();
}

fn orbits(c: &mut Criterion) {
    let sys = ReturnMapSystem::circle_in_ellipse(2.0, 1.5).unwrap();
    let seeds = random_seeds(&sys.core, 16, 3).unwrap();
    let params = OrbitParams::default();

    c.bench_function("orbit-ellipse-16", |b| {
        b.iter(|| {
            for s in &seeds {
                black_box(iterate_orbit(&sys, s, &params).unwrap());
            }
        })
    });
}

criterion_group!(benches, equilibria, orbits);
criterion_main!(benches);
