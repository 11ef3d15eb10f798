use channelpress::autoencoder::{
    gradient, loss, reconstruction_fidelity, reconstruction_fidelity_direct, GradientMethod, LossKind,
};
use channelpress::channels::choi_of_mixed;
use channelpress::linalg::fidelity;
use channelpress::linalg::random::random_density;
use channelpress::rng::stream_rng;
use channelpress_bench::{mixed_channel, model, pqc_batch};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_fidelity(c: &mut Criterion) {
    let mut group = c.benchmark_group("fidelity");
    for dim in [16usize, 64, 256] {
        let mut rng = stream_rng(1, 0);
        let rho = random_density(&mut rng, dim, dim);
        let sigma = random_density(&mut rng, dim, dim / 4);
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| fidelity(black_box(&rho), black_box(&sigma)).unwrap())
        });
    }
    group.finish();
}

fn bench_choi(c: &mut Criterion) {
    let mut group = c.benchmark_group("choi_of_mixed");
    for n in [2usize, 3, 4] {
        let e = mixed_channel(n, 4, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| choi_of_mixed(black_box(&e)).unwrap())
        });
    }
    group.finish();
}

fn bench_loss(c: &mut Criterion) {
    let batch = pqc_batch(4, 10, 5);
    let m = model(4, 3, 6);
    let mut group = c.benchmark_group("loss_n4_batch10");
    for kind in [LossKind::L2, LossKind::L3] {
        group.bench_function(format!("{kind:?}"), |b| {
            b.iter(|| loss(black_box(&batch), &m, kind).unwrap())
        });
    }
    group.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let batch = pqc_batch(4, 10, 5);
    let m = model(4, 3, 6);
    c.bench_function("parameter_shift_n4_batch10", |b| {
        b.iter(|| gradient(black_box(&batch), &m, LossKind::L3, GradientMethod::ParameterShift).unwrap())
    });
}

fn bench_reconstruction(c: &mut Criterion) {
    let e = mixed_channel(3, 3, 9);
    let m = model(3, 1, 10);
    let mut group = c.benchmark_group("reconstruction_fidelity_n3");
    group.bench_function("identity", |b| {
        b.iter(|| reconstruction_fidelity(black_box(&e), &m).unwrap())
    });
    group.bench_function("direct", |b| {
        b.iter(|| reconstruction_fidelity_direct(black_box(&e), &m).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_fidelity,
    bench_choi,
    bench_loss,
    bench_gradient,
    bench_reconstruction
);
criterion_main!(benches);
