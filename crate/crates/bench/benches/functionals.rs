use std::hint::black_box;

use arcmean::functionals::NearestPointScanner;
use arcmean::optimizer::{calibrate_arc_length, CalibrationSettings, TennisBallScale};
use arcmean::{
    mean_point_to_sphere, point_to_curve_mean, sphere_to_curve_mean, QuadratureRule, SpherePoint, SphericalCurve,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn seam() -> SphericalCurve {
    SphericalCurve::tennis_ball(0.7037).unwrap()
}

fn point_functionals(c: &mut Criterion) {
    let curve = seam();
    let p = SpherePoint::new(1.1, 0.4).unwrap();
    let rule = QuadratureRule::curve_default();
    c.bench_function("S_tilde seam trapezoid 512", |b| {
        b.iter(|| point_to_curve_mean(black_box(&curve), black_box(&p), &rule).unwrap())
    });

    let q = p.to_unit_vector();
    let gl = QuadratureRule::gauss_legendre(32, 1e-8).unwrap();
    c.bench_function("D_bar gauss-legendre 32", |b| {
        b.iter(|| mean_point_to_sphere(black_box(&q), &gl).unwrap())
    });

    let scanner = NearestPointScanner::new(&curve, 4096).unwrap();
    c.bench_function("nearest point seam 4096 scan", |b| b.iter(|| scanner.nearest(black_box(&q))));
}

fn sphere_functionals(c: &mut Criterion) {
    let curve = seam();
    let mut group = c.benchmark_group("M_tilde");
    group.sample_size(10);
    for n in [16, 32] {
        let sphere = QuadratureRule::gauss_legendre(n, 1.0).unwrap();
        let inner = QuadratureRule::trapezoid(256, 1e-6).unwrap();
        group.bench_function(format!("gauss-legendre {n}"), |b| {
            b.iter(|| sphere_to_curve_mean(black_box(&curve), &sphere, &inner).unwrap())
        });
    }
    group.finish();
}

fn calibration(c: &mut Criterion) {
    let settings = CalibrationSettings::default();
    c.bench_function("calibrate seam to 4pi", |b| {
        b.iter(|| calibrate_arc_length(&TennisBallScale, black_box((0.1, 1.4)), &settings).unwrap())
    });
}

criterion_group!(benches, point_functionals, sphere_functionals, calibration);
criterion_main!(benches);
