use proptest::prelude::*;
use stabletree_core::grower::{self, GrowConfig, Stopping};
use stabletree_core::{Dataset, FeatureMatrix, Node};

fn data() -> impl Strategy<Value = Dataset> {
    (1usize..40, 1usize..4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-10.0..10.0f64, n * m),
            prop::collection::vec(-10.0..10.0f64, n),
        )
            .prop_map(move |(x, y)| Dataset::unnamed(FeatureMatrix::new(x, n, m).unwrap(), y).unwrap())
    })
}

proptest! {
    #[test]
    fn routing_is_total_and_matches_a_walk(
        d in data(),
        probe in prop::collection::vec(-20.0..20.0f64, 3),
    ) {
        let cfg = GrowConfig { stopping: Stopping::Off, min_samples_leaf: 1, ..GrowConfig::default() };
        let t = grower::fit(&d, &cfg).unwrap();
        let x = &probe[..d.n_features()];
        let id = t.map_to_leaf(x).unwrap();
        prop_assert!(id >= 1 && id <= t.n_leaves());
        // Independent walk over the arena.
        let mut i = 0;
        let w = loop {
            match t.nodes()[i] {
                Node::Split(s) => i = if x[s.feature] <= s.value { s.left } else { s.right },
                Node::Leaf(l) => break l,
            }
        };
        prop_assert_eq!(w.id, id);
        prop_assert_eq!(t.predict(x).unwrap(), w.weight);
    }

    #[test]
    fn leaves_partition_training_rows(d in data()) {
        let t = grower::fit(&d, &GrowConfig::default()).unwrap();
        let mut counts = vec![0usize; t.n_leaves()];
        for r in d.x.rows() {
            counts[t.map_to_leaf(r).unwrap() - 1] += 1;
        }
        let stored: Vec<usize> = t.leaves().map(|l| l.n_train).collect();
        prop_assert_eq!(counts, stored);
        for (k, node) in t.nodes().iter().enumerate() {
            if let Node::Split(s) = node {
                prop_assert!(s.left > k && s.right > k);
            }
        }
    }

    #[test]
    fn max_depth_is_respected(d in data(), depth in 0usize..4) {
        let cfg = GrowConfig { stopping: Stopping::Off, max_depth: Some(depth), min_samples_leaf: 1, ..GrowConfig::default() };
        prop_assert!(grower::fit(&d, &cfg).unwrap().depth() <= depth);
    }
}
