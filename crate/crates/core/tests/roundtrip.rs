mod common;

use common::record;
use handover_core::data::{
    load_checkpoint, load_records, parse_records, records_to_string, save_checkpoint, save_records,
    Checkpoint,
};
use handover_core::feature::{FeatureRecord, Layout, NormStats};
use handover_core::mlp::{init_network, MlpNetwork, TrainConfig};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Records with arbitrary (non-dyadic) finite coordinates.
fn noisy_record() -> impl Strategy<Value = FeatureRecord> {
    (record(), vec(-1e4..1e4f64, 17 * 2)).prop_map(|(mut r, jitter)| {
        let mut pts = *r.keypoints.points();
        for (k, p) in pts.iter_mut().enumerate() {
            p.x += jitter[2 * k] * 1e-3;
            p.y += jitter[2 * k + 1] * 1e-3;
        }
        r.keypoints = handover_core::feature::BodyKeypoints::new(pts).unwrap();
        r
    })
}

fn checkpoint() -> impl Strategy<Value = Checkpoint> {
    (
        prop_oneof![Just(Layout::Absolute), Just(Layout::Relative)],
        vec(1usize..9, 4),
        any::<u64>(),
        vec(-1e3..1e3f64, 64),
        any::<bool>(),
        0.0..=1.0f64,
    )
        .prop_map(|(layout, hidden, seed, noise, with_stats, threshold)| {
            let net = init_network(layout, &hidden, seed).unwrap();
            let mut layers = net.layers().to_vec();
            let mut k = 0;
            for layer in &mut layers {
                for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                    *w += noise[k % noise.len()] / 7.0;
                    k += 1;
                }
            }
            let network = MlpNetwork::from_layers(layout, layers, seed).unwrap();
            let config = TrainConfig {
                hidden_dims: hidden,
                threshold,
                seed,
                normalize: with_stats,
                ..TrainConfig::with_layout(layout)
            };
            let norm_stats = with_stats.then(|| NormStats {
                layout,
                mean: (0..layout.len()).map(|i| noise[i] / 3.0).collect(),
                std: (0..layout.len())
                    .map(|i| 1.0 + noise[i + 1].abs() / 11.0)
                    .collect(),
            });
            Checkpoint {
                network,
                config,
                norm_stats,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn records_round_trip(records in vec(noisy_record(), 0..4)) {
        let text = records_to_string(&records).unwrap();
        prop_assert_eq!(parse_records(&text).unwrap(), records);
    }

    #[test]
    fn checkpoint_round_trip(c in checkpoint()) {
        let text = c.to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for i in 0..20 {
        let records = vec(noisy_record(), 0..6)
            .new_tree(&mut runner)
            .unwrap()
            .current();
        let path = dir.path().join(format!("records_{i}.json"));
        save_records(&records, &path).unwrap();
        assert_eq!(load_records(&path).unwrap(), records);

        let c = checkpoint().new_tree(&mut runner).unwrap().current();
        let path = dir.path().join(format!("model_{i}.json"));
        save_checkpoint(&c, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), c);
    }
}
