use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabletree::{model_io, Error};
use stabletree_core::{FitMeta, LeafNode, Node, SplitNode, TreeModel};

/// Random pre-order arena with exactly `leaves` leaves.
fn random_tree(leaves: usize, m: usize, rng: &mut ChaCha8Rng) -> TreeModel {
    fn build(nodes: &mut Vec<Node>, leaves: usize, m: usize, next_id: &mut usize, rng: &mut ChaCha8Rng) -> usize {
        let at = nodes.len();
        if leaves == 1 {
            *next_id += 1;
            nodes.push(Node::Leaf(LeafNode {
                id: *next_id,
                weight: rng.random_range(-1e3..1e3) * rng.random::<f64>(),
                n_train: rng.random_range(1..500),
                response_variance: rng.random::<f64>() * 10.0,
                prediction_variance: rng.random::<f64>() / 7.0,
            }));
            return at;
        }
        nodes.push(Node::Leaf(LeafNode {
            id: 0,
            weight: 0.0,
            n_train: 1,
            response_variance: 0.0,
            prediction_variance: 0.0,
        }));
        let left_leaves = rng.random_range(1..leaves);
        let left = build(nodes, left_leaves, m, next_id, rng);
        let right = build(nodes, leaves - left_leaves, m, next_id, rng);
        nodes[at] = Node::Split(SplitNode {
            feature: rng.random_range(0..m),
            value: rng.random_range(-3.0..3.0),
            left,
            right,
        });
        at
    }
    let mut nodes = Vec::new();
    build(&mut nodes, leaves, m, &mut 0, rng);
    let names = (0..m).map(|j| format!("f{j}")).collect();
    let meta = FitMeta {
        loss: "stable_squared_error".into(),
        alpha: 0.4,
        beta: 1.2,
        epsilon: 0.01,
        scaling_constant: rng.random(),
        seed: rng.random(),
    };
    TreeModel::new(nodes, names, meta).unwrap()
}

#[test]
fn thirty_one_leaves_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let t = random_tree(31, 4, &mut rng);
    let text = model_io::to_string(&t);
    let back = model_io::from_str(&text, "mem").unwrap();
    assert_eq!(back, t);
    assert_eq!(back.n_leaves(), 31);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
        assert_eq!(t.predict(&x).unwrap().to_bits(), back.predict(&x).unwrap().to_bits());
    }
    assert_eq!(model_io::to_string(&back), text);
}

#[test]
fn save_and_load_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let t = random_tree(5, 2, &mut ChaCha8Rng::seed_from_u64(1));
    model_io::save(&t, &path).unwrap();
    assert_eq!(model_io::load(&path).unwrap(), t);
    assert!(matches!(model_io::load(&dir.path().join("none.json")), Err(Error::Io { .. })));
}

#[test]
fn damaged_files_are_rejected() {
    let t = random_tree(6, 3, &mut ChaCha8Rng::seed_from_u64(2));
    let text = model_io::to_string(&t);
    let lines: Vec<&str> = text.lines().collect();
    // Drop the last node.
    let cut = lines[..lines.len() - 1].join("\n");
    assert!(matches!(model_io::from_str(&cut, "cut"), Err(Error::ModelParse { .. })));
    // Garbage in a node line.
    let bad = text.replacen("\"leaf\"", "\"lief\"", 1);
    assert!(matches!(model_io::from_str(&bad, "bad"), Err(Error::ModelParse { .. })));
    assert!(model_io::from_str("", "empty").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_trees_round_trip(leaves in 1usize..64, m in 1usize..6, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(leaves, m, &mut rng);
        let back = model_io::from_str(&model_io::to_string(&t), "mem").unwrap();
        prop_assert_eq!(&back, &t);
        for _ in 0..50 {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            prop_assert_eq!(t.map_to_leaf(&x).unwrap(), back.map_to_leaf(&x).unwrap());
        }
    }
}
