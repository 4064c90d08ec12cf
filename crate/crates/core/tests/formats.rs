use owoml_core::basis::build_raised_cosine_basis;
use owoml_core::checkpoint::{from_checkpoint_str, load_checkpoint, save_checkpoint, to_checkpoint_string};
use owoml_core::data::{read_dataset_bytes, write_dataset, TaskDataset};
use owoml_core::{Example, ModelParams, NetworkSpec, SpikeTrain, Topology};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn train_strategy(channels: usize, horizon: usize) -> impl Strategy<Value = SpikeTrain> {
    prop::collection::vec(0u8..2, channels * horizon)
        .prop_map(move |bits| SpikeTrain::from_rows(channels, horizon, &bits).unwrap())
}

fn dataset_strategy() -> impl Strategy<Value = TaskDataset> {
    (0usize..5, 1usize..4, 0usize..13).prop_flat_map(|(inp, out, horizon)| {
        let example = (train_strategy(inp, horizon), train_strategy(out, horizon), 0..out)
            .prop_map(|(x, y, label)| Example { x, y, label });
        prop::collection::vec(example, 0..6).prop_map(move |examples| TaskDataset {
            in_channels: inp,
            out_channels: out,
            horizon,
            examples,
        })
    })
}

proptest! {
    #[test]
    fn dataset_roundtrip(ds in dataset_strategy()) {
        let mut bytes = Vec::new();
        write_dataset(&ds, &mut bytes).unwrap();
        prop_assert_eq!(read_dataset_bytes(&bytes).unwrap(), ds);
    }

    #[test]
    fn truncated_dataset_is_rejected(ds in dataset_strategy(), cut in any::<prop::sample::Index>()) {
        let mut bytes = Vec::new();
        write_dataset(&ds, &mut bytes).unwrap();
        let cut = cut.index(bytes.len());
        prop_assert!(read_dataset_bytes(&bytes[..cut]).is_err());
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact(
        seed in any::<u64>(),
        inputs in 0usize..4,
        visible in 1usize..3,
        hidden in 0usize..4,
        scale in prop::sample::select(vec![1e-300, 1e-3, 1.0, 7.5, 1e12]),
    ) {
        let a = build_raised_cosine_basis(3, 5, None).unwrap();
        let b = build_raised_cosine_basis(2, 5, Some(1.3)).unwrap();
        let spec = NetworkSpec::preset(Topology::PaperRecurrent, inputs, visible, hidden, a, b).unwrap();
        let params = ModelParams::uniform(&spec, scale, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = to_checkpoint_string(&spec, &params).unwrap();
        let (spec2, params2) = from_checkpoint_str(&text).unwrap();
        prop_assert_eq!(&spec2, &spec);
        let same_bits = params.iter().zip(params2.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
        prop_assert!(same_bits);
        prop_assert_eq!(to_checkpoint_string(&spec2, &params2).unwrap(), text);
    }
}

#[test]
fn checkpoint_file_roundtrip() {
    let a = build_raised_cosine_basis(2, 4, None).unwrap();
    let spec = NetworkSpec::preset(Topology::Feedforward, 3, 2, 1, a.clone(), a).unwrap();
    let params = ModelParams::uniform(&spec, 0.4, &mut ChaCha8Rng::seed_from_u64(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("theta.ckpt");
    save_checkpoint(&path, &spec, &params).unwrap();
    let (spec2, params2) = load_checkpoint(&path).unwrap();
    assert_eq!((spec2, params2), (spec, params));
    assert!(load_checkpoint(dir.path().join("missing.ckpt")).is_err());
}
