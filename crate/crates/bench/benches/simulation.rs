use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use owoml_bench::{params, random_train, recurrent};
use owoml_core::{conditional_log_likelihood, step, NetworkState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for hidden in [4, 16, 64] {
        let spec = recurrent(16, 2, hidden);
        let theta = params(&spec, 0);
        let input = vec![1u8; 16];
        group.bench_with_input(BenchmarkId::from_parameter(hidden), &hidden, |b, _| {
            let mut state = NetworkState::new(&spec);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            b.iter(|| step(&mut state, &theta, &spec, black_box(&input), None, &mut rng).unwrap());
        });
    }
    group.finish();
}

fn bench_likelihood(c: &mut Criterion) {
    let spec = recurrent(16, 2, 4);
    let theta = params(&spec, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_train(16, 40, 0.3, &mut rng);
    let v = random_train(2, 40, 0.3, &mut rng);
    let h = random_train(4, 40, 0.3, &mut rng);
    c.bench_function("conditional_log_likelihood/T40", |b| {
        b.iter(|| conditional_log_likelihood(&v, &h, &x, black_box(&theta), &spec).unwrap())
    });
}

criterion_group!(benches, bench_step, bench_likelihood);
criterion_main!(benches);
