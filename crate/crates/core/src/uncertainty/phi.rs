use alloc::vec::Vec;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::tree::TreeModel;

/// Average within-leaf response variance over the rows `model` was fit on:
/// `n0^-1 * sum_d n_train(d) * response_variance(d)`.
pub fn scaling_constant(model: &TreeModel, n0: usize) -> Result<f64> {
    if n0 == 0 {
        return Err(Error::Empty("initial training set"));
    }
    let s: f64 = model
        .leaves()
        .map(|l| l.n_train as f64 * l.response_variance)
        .sum();
    Ok(s / n0 as f64)
}

#[inline]
pub fn phi_value(n: usize, prediction_variance: f64, c: f64, epsilon: f64) -> f64 {
    c / (n as f64 * prediction_variance + epsilon)
}

/// Uncertainty weight of `x` under `model`, read from the leaf `x` routes to.
pub fn phi(model: &TreeModel, x: &[f64], c: f64, epsilon: f64) -> Result<f64> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::Invalid(alloc::format!("scaling constant must be >= 0, got {c}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Invalid(alloc::format!("epsilon must be > 0, got {epsilon}")));
    }
    let leaf = model.leaf(x)?;
    Ok(phi_value(leaf.n_train, leaf.prediction_variance, c, epsilon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiWeights {
    pub c: f64,
    pub epsilon: f64,
    pub values: Vec<f64>,
}

/// Uncertainty weights for every row of `x`, with `c` computed from the
/// model's own leaf statistics.
pub fn phi_weights(model: &TreeModel, x: &FeatureMatrix, epsilon: f64) -> Result<PhiWeights> {
    let n0 = model.leaves().map(|l| l.n_train).sum();
    let c = scaling_constant(model, n0)?;
    let values = x
        .rows()
        .map(|r| phi(model, r, c, epsilon))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhiWeights { c, epsilon, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{FitMeta, LeafNode, Node, SplitNode};
    use alloc::vec;

    fn leaf(id: usize, n: usize, var_y: f64, var_w: f64) -> Node {
        Node::Leaf(LeafNode {
            id,
            weight: 0.0,
            n_train: n,
            response_variance: var_y,
            prediction_variance: var_w,
        })
    }

    fn two_leaves(a: Node, b: Node) -> TreeModel {
        let nodes = vec![
            Node::Split(SplitNode {
                feature: 0,
                value: 0.0,
                left: 1,
                right: 2,
            }),
            a,
            b,
        ];
        TreeModel::new(nodes, vec!["x".into()], FitMeta::default()).unwrap()
    }

    #[test]
    fn scaling_constant_examples() {
        let t = TreeModel::new(vec![leaf(1, 10, 4.0, 0.1)], vec!["x".into()], FitMeta::default())
            .unwrap();
        assert_eq!(scaling_constant(&t, 10).unwrap(), 4.0);
        let t = two_leaves(leaf(1, 5, 2.0, 0.1), leaf(2, 5, 6.0, 0.1));
        assert_eq!(scaling_constant(&t, 10).unwrap(), 4.0);
        let t = two_leaves(leaf(1, 5, 0.0, 0.0), leaf(2, 5, 0.0, 0.0));
        assert_eq!(scaling_constant(&t, 10).unwrap(), 0.0);
        assert!(scaling_constant(&t, 0).is_err());
    }

    #[test]
    fn phi_examples() {
        let t = two_leaves(leaf(1, 1, 0.0, 0.99), leaf(2, 3, 0.0, 0.0));
        assert!((phi(&t, &[-1.0], 1.0, 0.01).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(phi(&t, &[1.0], 1.0, 0.01).unwrap(), 100.0);
        assert_eq!(phi(&t, &[-1.0], 0.0, 0.01).unwrap(), 0.0);
        assert!(phi(&t, &[1.0], 1.0, 0.0).is_err());
    }
}
