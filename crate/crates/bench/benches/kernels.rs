use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robin_core::data::{label_encode, synth_generate, SynthOptions};
use robin_core::layers::SelfAttention;
use robin_core::metrics::roc_auc;
use robin_core::numeric::matmul;
use robin_core::training::train;
use robin_core::{Matrix, Model, ModelConfig, Schema, TrainConfig, Variant};

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn bench_matmul(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut group = c.benchmark_group("matmul");
    for n in [32, 64, 128] {
        let (a, b) = (random(&mut rng, n, n), random(&mut rng, n, n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| matmul(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn bench_attention(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sa = SelfAttention::new(31, 8, 1.0, &mut rng);
    let x = random(&mut rng, 64, 31);
    c.bench_function("sa_forward 64x31", |b| b.iter(|| sa.forward(black_box(&x)).unwrap()));
    let (out, caches) = sa.forward_cached(&x).unwrap();
    let g = Matrix::filled(out.rows(), out.cols(), 1.0);
    c.bench_function("sa_backward 64x31", |b| {
        b.iter(|| sa.backward(&x, &caches, black_box(&g)).unwrap())
    });
}

fn bench_epoch(c: &mut Criterion) {
    let schema = Schema::clinical();
    let ds = label_encode(&synth_generate(&SynthOptions::new(2, 151), &schema).unwrap(), &schema)
        .unwrap()
        .normalize()
        .unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train_epoch_151");
    group.sample_size(20);
    for v in Variant::ALL {
        let model = Model::build(ModelConfig::new(v, 31)).unwrap();
        group.bench_function(v.name(), |b| b.iter(|| train(model.clone(), &ds, &cfg).unwrap()));
    }
    group.finish();
}

fn bench_auc(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let labels: Vec<u8> = (0..10_000).map(|_| rng.random_bool(0.6) as u8).collect();
    c.bench_function("roc_auc 10k", |b| {
        b.iter(|| roc_auc(black_box(&scores), &labels).unwrap())
    });
}

criterion_group!(benches, bench_matmul, bench_attention, bench_epoch, bench_auc);
criterion_main!(benches);
