//! Binary regression tree stored as a pre-order node arena.
//!
//! Routing follows the half-plane rule `x[feature] <= value` goes left,
//! `x[feature] > value` goes right. Leaves are numbered `1..=D` in pre-order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitNode {
    pub feature: usize,
    pub value: f64,
    /// Arena index of the left child.
    pub left: usize,
    /// Arena index of the right child.
    pub right: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafNode {
    pub id: usize,
    pub weight: f64,
    /// Training rows routed to this leaf at fit time.
    pub n_train: usize,
    /// Population variance of the response within the leaf.
    pub response_variance: f64,
    /// Estimated variance of `weight`.
    pub prediction_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split(SplitNode),
    Leaf(LeafNode),
}

/// Settings the tree was fitted with.
#[derive(Debug, Clone, PartialEq)]
pub struct FitMeta {
    pub loss: String,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Scaling constant used for the uncertainty weights (0 for plain fits).
    pub scaling_constant: f64,
    pub seed: u64,
}

impl Default for FitMeta {
    fn default() -> Self {
        Self {
            loss: String::from("squared_error"),
            alpha: 0.0,
            beta: 0.0,
            epsilon: crate::loss::DEFAULT_EPSILON,
            scaling_constant: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    nodes: Vec<Node>,
    feature_names: Vec<String>,
    meta: FitMeta,
    /// `leaf_nodes[d - 1]` is the arena index of leaf `d`.
    leaf_nodes: Vec<usize>,
}

impl TreeModel {
    /// Builds a model from an arena whose root is `nodes[0]`.
    ///
    /// Every child index must be greater than its parent's, every node must be
    /// reachable exactly once, and leaf ids must be `1..=D`.
    pub fn new(nodes: Vec<Node>, feature_names: Vec<String>, meta: FitMeta) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidTree("no nodes".into()));
        }
        let m = feature_names.len();
        let mut seen = vec![false; nodes.len()];
        let mut leaf_nodes = vec![usize::MAX; nodes.len()];
        let mut n_leaves = 0;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(Error::InvalidTree(alloc::format!("node {i} referenced twice")));
            }
            seen[i] = true;
            match &nodes[i] {
                Node::Split(s) => {
                    if s.feature >= m {
                        return Err(Error::InvalidTree(alloc::format!(
                            "node {i} splits on feature {} but the model has {m}",
                            s.feature
                        )));
                    }
                    if !s.value.is_finite() {
                        return Err(Error::InvalidTree(alloc::format!(
                            "node {i} has a non-finite split value"
                        )));
                    }
                    for c in [s.left, s.right] {
                        if c <= i || c >= nodes.len() {
                            return Err(Error::InvalidTree(alloc::format!(
                                "node {i} has invalid child {c}"
                            )));
                        }
                        stack.push(c);
                    }
                }
                Node::Leaf(l) => {
                    if l.n_train == 0 {
                        return Err(Error::InvalidTree(alloc::format!("leaf {} is empty", l.id)));
                    }
                    if !l.weight.is_finite() {
                        return Err(Error::InvalidTree(alloc::format!(
                            "leaf {} has a non-finite weight",
                            l.id
                        )));
                    }
                    for v in [l.response_variance, l.prediction_variance] {
                        if !(v.is_finite() && v >= 0.0) {
                            return Err(Error::InvalidTree(alloc::format!(
                                "leaf {} has an invalid variance",
                                l.id
                            )));
                        }
                    }
                    if l.id == 0 || l.id > nodes.len() || leaf_nodes[l.id - 1] != usize::MAX {
                        return Err(Error::InvalidTree(alloc::format!(
                            "leaf id {} is out of range or duplicated",
                            l.id
                        )));
                    }
                    leaf_nodes[l.id - 1] = i;
                    n_leaves += 1;
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidTree("unreachable nodes".into()));
        }
        leaf_nodes.truncate(n_leaves);
        if leaf_nodes.iter().any(|&i| i == usize::MAX) {
            return Err(Error::InvalidTree("leaf ids are not contiguous".into()));
        }
        Ok(Self {
            nodes,
            feature_names,
            meta,
            leaf_nodes,
        })
    }

    /// A tree with a single leaf.
    pub fn constant(leaf: LeafNode, feature_names: Vec<String>, meta: FitMeta) -> Result<Self> {
        Self::new(vec![Node::Leaf(LeafNode { id: 1, ..leaf })], feature_names, meta)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn meta(&self) -> &FitMeta {
        &self.meta
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_nodes.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Leaves ordered by id.
    pub fn leaves(&self) -> impl ExactSizeIterator<Item = &LeafNode> + '_ {
        self.leaf_nodes.iter().map(move |&i| match &self.nodes[i] {
            Node::Leaf(l) => l,
            Node::Split(_) => unreachable!("leaf index points at a split"),
        })
    }

    /// Leaf with the given id (`1..=D`).
    pub fn leaf_by_id(&self, id: usize) -> Option<&LeafNode> {
        let &i = self.leaf_nodes.get(id.checked_sub(1)?)?;
        match &self.nodes[i] {
            Node::Leaf(l) => Some(l),
            Node::Split(_) => None,
        }
    }

    /// Maximum root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            match &self.nodes[i] {
                Node::Split(s) => {
                    stack.push((s.left, d + 1));
                    stack.push((s.right, d + 1));
                }
                Node::Leaf(_) => max = max.max(d),
            }
        }
        max
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Arity {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction input"));
        }
        Ok(())
    }

    /// The leaf `x` routes to.
    pub fn leaf(&self, x: &[f64]) -> Result<&LeafNode> {
        self.check_input(x)?;
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split(s) => i = if x[s.feature] <= s.value { s.left } else { s.right },
                Node::Leaf(l) => return Ok(l),
            }
        }
    }

    pub fn map_to_leaf(&self, x: &[f64]) -> Result<usize> {
        self.leaf(x).map(|l| l.id)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.leaf(x).map(|l| l.weight)
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.rows().map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: usize, weight: f64) -> Node {
        Node::Leaf(LeafNode {
            id,
            weight,
            n_train: 1,
            response_variance: 0.0,
            prediction_variance: 0.0,
        })
    }

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| alloc::format!("x{j}")).collect()
    }

    fn stump(s: f64, a: f64, b: f64) -> TreeModel {
        let nodes = vec![
            Node::Split(SplitNode {
                feature: 0,
                value: s,
                left: 1,
                right: 2,
            }),
            leaf(1, a),
            leaf(2, b),
        ];
        TreeModel::new(nodes, names(1), FitMeta::default()).unwrap()
    }

    #[test]
    fn single_leaf_predicts_constant() {
        let t = TreeModel::new(vec![leaf(1, 3.5)], names(2), FitMeta::default()).unwrap();
        assert_eq!(t.predict(&[1e9, -4.0]).unwrap(), 3.5);
        assert_eq!(t.map_to_leaf(&[0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn boundary_routes_left() {
        let t = stump(1.0, 2.0, 7.0);
        assert_eq!(t.predict(&[1.0]).unwrap(), 2.0);
        assert_eq!(t.predict(&[1.0 + f64::EPSILON]).unwrap(), 7.0);
    }

    #[test]
    fn sign_routing() {
        let t = stump(0.0, -1.0, 1.0);
        assert_eq!(t.map_to_leaf(&[-1.0]).unwrap(), 1);
        assert_eq!(t.map_to_leaf(&[1.0]).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = stump(0.0, -1.0, 1.0);
        assert_eq!(
            t.predict(&[1.0, 2.0]),
            Err(Error::Arity {
                expected: 1,
                got: 2
            })
        );
        assert!(matches!(t.predict(&[f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_malformed_arenas() {
        // Child pointing backwards.
        let nodes = vec![
            Node::Split(SplitNode {
                feature: 0,
                value: 0.0,
                left: 0,
                right: 1,
            }),
            leaf(1, 0.0),
        ];
        assert!(TreeModel::new(nodes, names(1), FitMeta::default()).is_err());
        // Duplicate leaf id.
        let nodes = vec![
            Node::Split(SplitNode {
                feature: 0,
                value: 0.0,
                left: 1,
                right: 2,
            }),
            leaf(1, 0.0),
            leaf(1, 0.0),
        ];
        assert!(TreeModel::new(nodes, names(1), FitMeta::default()).is_err());
        // Unreachable node.
        assert!(TreeModel::new(vec![leaf(1, 0.0), leaf(2, 0.0)], names(1), FitMeta::default())
            .is_err());
        // Feature out of range.
        let nodes = vec![
            Node::Split(SplitNode {
                feature: 3,
                value: 0.0,
                left: 1,
                right: 2,
            }),
            leaf(1, 0.0),
            leaf(2, 0.0),
        ];
        assert!(TreeModel::new(nodes, names(1), FitMeta::default()).is_err());
    }

    #[test]
    fn leaves_are_listed_by_id() {
        let t = stump(0.0, 5.0, 6.0);
        let w: Vec<f64> = t.leaves().map(|l| l.weight).collect();
        assert_eq!(w, vec![5.0, 6.0]);
        assert_eq!(t.leaf_by_id(2).unwrap().weight, 6.0);
        assert!(t.leaf_by_id(0).is_none());
        assert_eq!(t.depth(), 1);
    }
}
