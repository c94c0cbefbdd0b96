use criterion::{black_box, criterion_group, criterion_main, Criterion};

use qcball_core::dilatation::{sample_dilatation, DEFAULT_STEP};
use qcball_core::geometry::{Ball, ExtPoint};
use qcball_core::mobius::canonical_t;
use qcball_core::modulus::{capacity_2d, InnerPlate, OuterPlate, RingDomain};
use qcball_core::quasiball::{construct, BallChain};
use qcball_core::qcmaps::{MapExpr, Winding};
use qcball_core::sample::Sampler;

fn bench_mobius_eval(c: &mut Criterion) {
    let t = canonical_t(&[0.3, -0.2, 0.1]).unwrap();
    let x = ExtPoint::finite(vec![0.4, 0.1, -0.5]);
    c.bench_function("mobius_eval", |b| {
        b.iter(|| t.evaluate(black_box(&x)).unwrap())
    });
}

fn bench_capacity_grid(c: &mut Criterion) {
    let ring = RingDomain {
        n: 2,
        inner: InnerPlate::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        outer: OuterPlate::Sphere {
            center: vec![0.0, 0.0],
            radius: std::f64::consts::E,
        },
    };
    c.bench_function("capacity_2d_128", |b| {
        b.iter(|| capacity_2d(black_box(&ring), 128).unwrap())
    });
}

fn bench_construct_chain(c: &mut Criterion) {
    let chain = BallChain::new(vec![
        Ball::new(vec![0.0, 0.0], 1.0).unwrap(),
        Ball::new(vec![1.2, 0.0], 1.0).unwrap(),
        Ball::new(vec![2.45, 0.0], 0.6).unwrap(),
    ])
    .unwrap();
    c.bench_function("construct_3_chain", |b| {
        b.iter(|| construct(black_box(&chain)).unwrap())
    });
}

fn bench_dilatation_sampling(c: &mut Criterion) {
    let e = MapExpr::Winding(Winding::new(2, (0, 1)).unwrap());
    let s = Sampler::Shell {
        center: vec![0.0, 0.0],
        r_min: 0.2,
        r_max: 1.0,
    };
    c.bench_function("dilatation_winding_1k", |b| {
        b.iter(|| sample_dilatation(black_box(&e), &s, 1000, DEFAULT_STEP, 7).unwrap())
    });
}

criterion_group!(
    benches,
    bench_mobius_eval,
    bench_capacity_grid,
    bench_construct_chain,
    bench_dilatation_sampling
);
criterion_main!(benches);
