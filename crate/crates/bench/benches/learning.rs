use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use owoml_bench::{examples, params, recurrent};
use owoml_core::oracle::{exact_log_marginal, TinyInstance, TinySizes};
use owoml_core::meta::meta_update;
use owoml_core::{update, LearnConfig, MetaConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_update(c: &mut Criterion) {
    let spec = recurrent(16, 2, 4);
    let theta = params(&spec, 0);
    let data = examples(&spec, 10, 40, 1);
    let cfg = LearnConfig::default();
    c.bench_function("update/10x40", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        b.iter(|| update(black_box(&theta), &data, &spec, &cfg, &mut rng).unwrap())
    });
}

fn bench_meta_update(c: &mut Criterion) {
    let spec = recurrent(16, 2, 4);
    let theta = params(&spec, 0);
    let batch: Vec<_> = (0..5).map(|n| examples(&spec, 2, 40, 10 + n)).collect();
    let cfg = MetaConfig::default();
    c.bench_function("meta_update/5x2", |b| {
        b.iter(|| meta_update(black_box(&theta), &batch, &spec, &cfg, 4).unwrap())
    });
}

fn bench_exact_marginal(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_log_marginal");
    for (hidden, horizon) in [(1, 5), (2, 5), (3, 4)] {
        let sizes = TinySizes { hidden, horizon, ..TinySizes::default() };
        let inst = TinyInstance::random(sizes, 1.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let id = format!("h{hidden}xT{horizon}");
        group.bench_with_input(BenchmarkId::from_parameter(id), &inst, |b, inst| {
            b.iter(|| exact_log_marginal(black_box(inst)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_update, bench_meta_update, bench_exact_marginal);
criterion_main!(benches);
