//! Fixtures shared by the benchmarks.

use owoml_core::basis::build_raised_cosine_basis;
use owoml_core::{Example, ModelParams, NetworkSpec, SpikeTrain, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn recurrent(inputs: usize, visible: usize, hidden: usize) -> NetworkSpec {
    let a = build_raised_cosine_basis(3, 10, None).unwrap();
    let b = build_raised_cosine_basis(3, 10, None).unwrap();
    NetworkSpec::preset(Topology::PaperRecurrent, inputs, visible, hidden, a, b).unwrap()
}

pub fn params(spec: &NetworkSpec, seed: u64) -> ModelParams {
    ModelParams::uniform(spec, 0.5, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_train(channels: usize, horizon: usize, rate: f64, rng: &mut impl Rng) -> SpikeTrain {
    let bits: Vec<u8> = (0..channels * horizon)
        .map(|_| u8::from(rng.gen::<f64>() < rate))
        .collect();
    SpikeTrain::from_rows(channels, horizon, &bits).unwrap()
}

pub fn examples(spec: &NetworkSpec, count: usize, horizon: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| Example {
            x: random_train(spec.num_inputs(), horizon, 0.3, &mut rng),
            y: random_train(spec.visible().len(), horizon, 0.3, &mut rng),
            label: k % spec.visible().len(),
        })
        .collect()
}
