//! Text model files.
//!
//! ```text
//! {"meta":{"loss":"squared_error","alpha":..,"beta":..,"epsilon":..,"c":..,"seed":..,"features":[..]},
//!  "nodes":[
//!   {"split":{"feature":0,"value":2.5000000000000000e0}},
//!   {"leaf":{"id":1,"weight":..,"n":4,"var_y":..,"var_w":..}},
//!   ...]}
//! ```
//!
//! Nodes are listed in pre-order, so child links are implicit: a split's left
//! child follows it directly and its right child follows the left subtree.
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use serde_json::value::RawValue;
use stabletree_core::{FitMeta, LeafNode, Node, SplitNode, TreeModel};

use crate::error::{Error, Result};

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_string(model: &TreeModel) -> String {
    let m = model.meta();
    let mut s = String::new();
    let features = serde_json::to_string(model.feature_names()).expect("strings serialize");
    let loss = serde_json::to_string(&m.loss).expect("strings serialize");
    write!(
        s,
        "{{\"meta\":{{\"loss\":{loss},\"alpha\":{},\"beta\":{},\"epsilon\":{},\"c\":{},\"seed\":{},\"features\":{features}}},\n\"nodes\":[",
        float(m.alpha),
        float(m.beta),
        float(m.epsilon),
        float(m.scaling_constant),
        m.seed
    )
    .unwrap();
    for (i, node) in model.nodes().iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        match node {
            Node::Split(n) => write!(
                s,
                "{{\"split\":{{\"feature\":{},\"value\":{}}}}}",
                n.feature,
                float(n.value)
            ),
            Node::Leaf(l) => write!(
                s,
                "{{\"leaf\":{{\"id\":{},\"weight\":{},\"n\":{},\"var_y\":{},\"var_w\":{}}}}}",
                l.id,
                float(l.weight),
                l.n_train,
                float(l.response_variance),
                float(l.prediction_variance)
            ),
        }
        .unwrap();
    }
    s.push_str("\n]}\n");
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRaw {
    loss: String,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    c: f64,
    seed: u64,
    features: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRaw<'a> {
    meta: MetaRaw,
    #[serde(borrow)]
    nodes: Vec<&'a RawValue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum NodeRaw {
    Split {
        feature: usize,
        value: f64,
    },
    Leaf {
        id: usize,
        weight: f64,
        n: usize,
        var_y: f64,
        var_w: f64,
    },
}

fn line_col_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses a model; `source` labels errors, which carry a byte offset.
pub fn from_str(text: &str, source: &str) -> Result<TreeModel> {
    let err = |offset: usize, message: String| Error::ModelParse {
        path: source.to_string(),
        offset,
        message,
    };
    let file: FileRaw = serde_json::from_str(text)
        .map_err(|e| err(line_col_offset(text, e.line(), e.column()), e.to_string()))?;
    let offset_of = |raw: &RawValue| raw.get().as_ptr() as usize - text.as_ptr() as usize;
    if file.nodes.is_empty() {
        return Err(err(text.len(), "model has no nodes".into()));
    }

    let mut nodes = Vec::with_capacity(file.nodes.len());
    // Splits still waiting for a child, and whether the left one is set.
    let mut open: Vec<(usize, bool)> = Vec::new();
    for (i, raw) in file.nodes.iter().enumerate() {
        let at = offset_of(raw);
        let node: NodeRaw = serde_json::from_str(raw.get())
            .map_err(|e| err(at + line_col_offset(raw.get(), e.line(), e.column()), e.to_string()))?;
        if i > 0 {
            let Some(top) = open.last_mut() else {
                return Err(err(at, format!("node {i} follows a complete tree")));
            };
            let parent = top.0;
            let Node::Split(s) = &mut nodes[parent] else { unreachable!() };
            if top.1 {
                s.right = i;
                open.pop();
            } else {
                s.left = i;
                top.1 = true;
            }
        }
        nodes.push(match node {
            NodeRaw::Split { feature, value } => {
                open.push((i, false));
                Node::Split(SplitNode {
                    feature,
                    value,
                    left: 0,
                    right: 0,
                })
            }
            NodeRaw::Leaf {
                id,
                weight,
                n,
                var_y,
                var_w,
            } => Node::Leaf(LeafNode {
                id,
                weight,
                n_train: n,
                response_variance: var_y,
                prediction_variance: var_w,
            }),
        });
    }
    if let Some(&(parent, _)) = open.last() {
        let last = file.nodes.last().unwrap();
        let end = offset_of(last) + last.get().len();
        return Err(err(end, format!("split node {parent} is missing a child")));
    }

    let m = file.meta;
    let meta = FitMeta {
        loss: m.loss,
        alpha: m.alpha,
        beta: m.beta,
        epsilon: m.epsilon,
        scaling_constant: m.c,
        seed: m.seed,
    };
    TreeModel::new(nodes, m.features, meta).map_err(|e| err(offset_of(file.nodes[0]), e.to_string()))
}

pub fn save(model: &TreeModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<TreeModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> TreeModel {
        let leaf = |id, w| {
            Node::Leaf(LeafNode {
                id,
                weight: w,
                n_train: 3,
                response_variance: 0.25,
                prediction_variance: 0.1,
            })
        };
        TreeModel::new(
            vec![
                Node::Split(SplitNode {
                    feature: 1,
                    value: -0.1,
                    left: 1,
                    right: 2,
                }),
                leaf(1, 1.0 / 3.0),
                leaf(2, -2e-300),
            ],
            vec!["a".into(), "b \"q\"".into()],
            FitMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let t = stump();
        let s = to_string(&t);
        let back = from_str(&s, "m").unwrap();
        assert_eq!(back, t);
        assert_eq!(to_string(&back), s);
    }

    #[test]
    fn truncated_tree_reports_offset() {
        let s = to_string(&stump());
        let cut = s.rfind(",\n{\"leaf\"").unwrap();
        let bad = format!("{}\n]}}\n", &s[..cut]);
        match from_str(&bad, "m") {
            Err(Error::ModelParse { offset, message, .. }) => {
                assert!(message.contains("missing a child"), "{message}");
                assert!(offset > 0 && offset <= bad.len());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_offset_points_into_text() {
        let s = to_string(&stump());
        let bad = s.replacen("\"weight\":", "\"weight\" ", 1);
        match from_str(&bad, "m") {
            Err(Error::ModelParse { offset, .. }) => {
                let pos = bad.find("\"weight\" ").unwrap();
                assert!(offset >= pos && offset <= pos + 12, "{offset} vs {pos}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_extra_nodes_and_garbage() {
        let s = to_string(&stump());
        let extra = s.replace("\n]}", ",\n{\"leaf\":{\"id\":3,\"weight\":0,\"n\":1,\"var_y\":0,\"var_w\":0}}\n]}");
        assert!(matches!(from_str(&extra, "m"), Err(Error::ModelParse { .. })));
        assert!(from_str("", "m").is_err());
        assert!(from_str("{\"meta\":1}", "m").is_err());
    }
}
