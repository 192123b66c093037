use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secom_core::codec::encode_chunk;
use secom_core::netsim::BenchmarkConfig;
use secom_core::predictor::{FramePredictor, FrameStats, PredictorModel};
use secom_core::splat::{render, CameraPose, Gaussian3D, SplatModel};

fn scene(n: usize) -> SplatModel {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    SplatModel::new(
        (0..n)
            .map(|_| {
                let p = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let s = Vector3::new(rng.random_range(0.05..0.2), rng.random_range(0.05..0.2), rng.random_range(0.05..0.2));
                Gaussian3D::new(p, s, [1.0, 0.0, 0.0, 0.0], rng.random_range(0.3..0.9), [rng.random(), rng.random(), rng.random()])
                    .unwrap()
            })
            .collect(),
    )
}

fn bench_render(c: &mut Criterion) {
    let model = scene(500);
    let cam = CameraPose::look_at(Vector3::new(0.0, 0.0, -4.0), Vector3::zeros(), Vector3::y(), 120.0, 128, 128).unwrap();
    c.bench_function("render 500 gaussians 128x128", |b| b.iter(|| render(black_box(&model), &cam, [0.0; 3]).unwrap()));
}

fn bench_codec(c: &mut Criterion) {
    let cfg = BenchmarkConfig::default();
    let (_, chunks) = cfg.scenario(1).unwrap();
    let dims = cfg.dynamic_dims();
    c.bench_function("encode_chunk M=20 N=100 Q=8", |b| {
        b.iter(|| encode_chunk(black_box(&chunks[0]), &dims, 8, 2520.0).unwrap().to_bytes())
    });
}

fn bench_rollout(c: &mut Criterion) {
    let cfg = BenchmarkConfig::default();
    let (_, chunks) = cfg.scenario(2).unwrap();
    let dims = cfg.dynamic_dims();
    let seqs: Vec<_> = chunks.iter().map(|ch| ch.select(&dims)).collect();
    let stats = FrameStats::from_sequences(&seqs).unwrap();
    let model = PredictorModel::init(32, 10, stats, &mut ChaCha8Rng::seed_from_u64(3));
    let seed = &seqs[0].frames()[..60];
    c.bench_function("lstm rollout 40 frames H=32", |b| b.iter(|| model.predict(black_box(seed), 40)));
}

criterion_group!(benches, bench_render, bench_codec, bench_rollout);
criterion_main!(benches);
