use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nalgebra::Vector3;
use std::hint::black_box;
use thickscape::sphere::SphericalHarmonicField;
use thickscape::ReturnMapSystem;

fn planar(c: &mut Criterion) {
    let systems = [
        ("ellipse", ReturnMapSystem::circle_in_ellipse(2.0, 1.5).unwrap()),
        ("fourier", ReturnMapSystem::planar_fourier(vec![[1.0, 0.0], [0.1, 0.05], [0.0, 0.08], [0.03, 0.0]]).unwrap()),
    ];
    let mut group = c.benchmark_group("return-map-2d");
    group.throughput(Throughput::Elements(1));
    for (name, sys) in &systems {
        let p = sys.core.curve_point(0.7).unwrap();
        group.bench_with_input(BenchmarkId::new("F", name), &p, |b, p| b.iter(|| sys.return_map(black_box(p)).unwrap()));
        group.bench_with_input(BenchmarkId::new("DF", name), &p, |b, p| {
            b.iter(|| sys.return_jacobian(black_box(p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("jet", name), &p, |b, p| {
            b.iter(|| sys.thickness_jet(black_box(p)).unwrap())
        });
    }
    group.finish();
}

fn spherical(c: &mut Criterion) {
    let mut field = SphericalHarmonicField::zonal_quadratic(1.0, 0.1);
    field.coeffs.push(thickscape::sphere::HarmonicTerm { l: 3, m: 1, c: 0.02 });
    let sys = ReturnMapSystem::spherical(field).unwrap();
    let p = sys.core.sphere_point(&Vector3::new(0.48, -0.6, 0.64)).unwrap();

    let mut group = c.benchmark_group("return-map-s2");
    group.bench_function("F", |b| b.iter(|| sys.return_map(black_box(&p)).unwrap()));
    group.bench_function("DF", |b| b.iter(|| sys.return_jacobian(black_box(&p)).unwrap()));
    group.bench_function("jet", |b| b.iter(|| sys.thickness_jet(black_box(&p)).unwrap()));
    group.finish();
}

criterion_group!(benches, planar, spherical);
criterion_main!(benches);
