//! Greedy top-down tree construction.
//!
//! Splits maximize the second-order reduction computed from per-row
//! gradient/Hessian pairs, so the same grower serves a plain squared-error fit
//! (`g = -2y`, `h = 2`) and a stable-loss update. With adaptive stopping a
//! split is kept only if its reduction beats the optimism expected from
//! picking the best of many candidate splits under no signal.

mod split;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use split::{best_split, reduction, SplitCandidate, SplitSearch};

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::loss::{self, GradHess, RowTargets, StableLossConfig};
use crate::tree::{FitMeta, LeafNode, Node, SplitNode, TreeModel};
use crate::uncertainty::{self, CirConfig, CirEstimator};

/// How a found split is vetted before it is applied.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Stopping {
    /// Keep the split iff its reduction exceeds its estimated optimism.
    #[default]
    Adaptive,
    /// Keep the split iff its reduction exceeds the given constant.
    Threshold(f64),
    /// Keep every split with positive reduction.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowConfig {
    pub stopping: Stopping,
    /// `None` grows until stopping or leaf-size limits apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub cir: CirConfig,
    pub seed: u64,
}

impl Default for GrowConfig {
    fn default() -> Self {
        Self {
            stopping: Stopping::Adaptive,
            max_depth: None,
            min_samples_leaf: 2,
            cir: CirConfig::default(),
            seed: 0,
        }
    }
}

impl GrowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Invalid("min_samples_leaf must be >= 1".into()));
        }
        if let Stopping::Threshold(t) = self.stopping {
            if !t.is_finite() {
                return Err(Error::NonFinite("split threshold"));
            }
        }
        Ok(())
    }
}

/// Gradient/Hessian summary of the rows at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub n: usize,
    pub g_sum: f64,
    pub h_sum: f64,
    /// Newton weight `-g_sum / h_sum`.
    pub weight: f64,
    /// `sum((g + h * weight)^2)`.
    pub score_sq: f64,
}

impl NodeStats {
    pub fn compute(rows: &[usize], gh: &[GradHess]) -> Self {
        let (g_sum, h_sum) = rows
            .iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + gh[i].g, h + gh[i].h));
        let weight = -g_sum / h_sum;
        let score_sq = rows
            .iter()
            .map(|&i| {
                let s = gh[i].g + gh[i].h * weight;
                s * s
            })
            .sum();
        Self {
            n: rows.len(),
            g_sum,
            h_sum,
            weight,
            score_sq,
        }
    }

    /// Optimism of the node's single fitted weight, in loss units
    /// (`sum((g + h w)^2) / sum(h)`).
    pub fn optimism(&self) -> f64 {
        self.score_sq / self.h_sum
    }
}

/// Adaptive stopping test.
///
/// `adjustment` is the node's selection factor `(1 + E[max B]) / 2` from
/// [`CirEstimator::adjustment`]. Splitting replaces one fitted weight by two
/// greedily selected ones; the expected extra optimism is the node optimism
/// times `E[max B] = 2 * adjustment - 1`. The split is kept iff the observed
/// reduction exceeds it.
pub fn accept_split(candidate: &SplitCandidate, stats: &NodeStats, adjustment: f64) -> bool {
    if !(candidate.reduction.is_finite() && candidate.reduction > 0.0) {
        return false;
    }
    if !(stats.h_sum > 0.0 && stats.score_sq.is_finite() && adjustment.is_finite() && adjustment >= 1.0) {
        return false;
    }
    let expected_max = 2.0 * adjustment - 1.0;
    candidate.reduction > stats.optimism() * expected_max
}

struct Task {
    rows: Vec<usize>,
    depth: usize,
    parent: Option<(usize, bool)>,
    adjustment: f64,
}

/// Tree grower holding the configuration and a shared CIR path cache.
#[derive(Debug, Clone)]
pub struct Grower {
    config: GrowConfig,
    cir: CirEstimator,
}

impl Grower {
    /// Builds the CIR cache for up to `n_features` features, seeded from
    /// `config.seed`.
    pub fn new(config: GrowConfig, n_features: usize) -> Result<Self> {
        config.validate()?;
        let cir = CirEstimator::new(config.cir, n_features, config.seed)?;
        Ok(Self { config, cir })
    }

    pub fn with_estimator(config: GrowConfig, cir: CirEstimator) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, cir })
    }

    pub fn config(&self) -> &GrowConfig {
        &self.config
    }

    pub fn estimator(&self) -> &CirEstimator {
        &self.cir
    }

    /// Grows a tree on `(x, y)` driven by the per-row `gh`.
    pub fn grow(
        &self,
        x: &FeatureMatrix,
        y: &[f64],
        gh: &[GradHess],
        feature_names: Vec<String>,
        meta: FitMeta,
    ) -> Result<TreeModel> {
        let n = x.n_rows();
        if n == 0 {
            return Err(Error::Empty("training data"));
        }
        if y.len() != n {
            return Err(Error::LengthMismatch { left: y.len(), right: n });
        }
        if gh.len() != n {
            return Err(Error::LengthMismatch { left: gh.len(), right: n });
        }
        if feature_names.len() != x.n_cols() {
            return Err(Error::Arity {
                expected: x.n_cols(),
                got: feature_names.len(),
            });
        }
        if x.n_cols() > self.cir.n_features() {
            return Err(Error::Arity {
                expected: self.cir.n_features(),
                got: x.n_cols(),
            });
        }
        split::check_grad_hess(gh)?;

        let cfg = &self.config;
        let max_depth = cfg.max_depth.unwrap_or(usize::MAX);
        let mut nodes: Vec<Node> = Vec::new();
        let mut n_leaves = 0;
        let mut scratch = Vec::with_capacity(n);
        let mut y_buf = Vec::new();
        let mut gh_buf = Vec::new();
        let mut stack = vec![Task {
            rows: (0..n).collect(),
            depth: 0,
            parent: None,
            adjustment: 1.0,
        }];

        while let Some(task) = stack.pop() {
            let idx = nodes.len();
            if let Some((p, is_left)) = task.parent {
                if let Node::Split(s) = &mut nodes[p] {
                    if is_left {
                        s.left = idx;
                    } else {
                        s.right = idx;
                    }
                }
            }
            let stats = NodeStats::compute(&task.rows, gh);

            if task.depth < max_depth && task.rows.len() >= 2 * cfg.min_samples_leaf {
                let found = split::search(&task.rows, x, gh, cfg.min_samples_leaf, &mut scratch);
                if let Some(c) = found.best {
                    let node_adjustment = self.cir.adjustment(&found.context);
                    let keep = match cfg.stopping {
                        Stopping::Adaptive => accept_split(&c, &stats, node_adjustment),
                        Stopping::Threshold(t) => c.reduction > t,
                        Stopping::Off => true,
                    };
                    if keep {
                        let (left, right): (Vec<usize>, Vec<usize>) =
                            task.rows.iter().partition(|&&i| x.get(i, c.feature) <= c.value);
                        debug_assert_eq!(left.len(), c.n_left);
                        nodes.push(Node::Split(SplitNode {
                            feature: c.feature,
                            value: c.value,
                            left: 0,
                            right: 0,
                        }));
                        for (rows, is_left) in [(right, false), (left, true)] {
                            stack.push(Task {
                                rows,
                                depth: task.depth + 1,
                                parent: Some((idx, is_left)),
                                adjustment: node_adjustment,
                            });
                        }
                        continue;
                    }
                }
            }

            y_buf.clear();
            y_buf.extend(task.rows.iter().map(|&i| y[i]));
            gh_buf.clear();
            gh_buf.extend(task.rows.iter().map(|&i| gh[i]));
            let var = uncertainty::leaf_prediction_variance(&gh_buf, stats.weight, task.adjustment)?;
            n_leaves += 1;
            nodes.push(Node::Leaf(LeafNode {
                id: n_leaves,
                weight: stats.weight,
                n_train: task.rows.len(),
                response_variance: uncertainty::response_variance(&y_buf),
                prediction_variance: var.variance,
            }));
        }

        TreeModel::new(nodes, feature_names, meta)
    }

    /// Plain squared-error fit.
    pub fn fit(&self, data: &Dataset) -> Result<TreeModel> {
        let gh: Vec<GradHess> = data
            .y
            .iter()
            .map(|&y| loss::grad_hess(&RowTargets::plain(y), &StableLossConfig::default()))
            .collect::<Result<_>>()?;
        let meta = FitMeta {
            seed: self.config.seed,
            ..FitMeta::default()
        };
        self.grow(&data.x, &data.y, &gh, data.feature_names.clone(), meta)
    }

    /// Refits on `data` (all data available now) under the stable loss
    /// anchored to `f0`'s predictions.
    pub fn update(&self, f0: &TreeModel, data: &Dataset, cfg: &StableLossConfig) -> Result<TreeModel> {
        cfg.validate()?;
        let targets = stable_targets(f0, data, cfg)?;
        let gh = loss::grad_hess_all(&targets.rows, cfg)?;
        let meta = FitMeta {
            loss: String::from(cfg.loss.name()),
            alpha: cfg.alpha,
            beta: cfg.beta,
            epsilon: cfg.epsilon,
            scaling_constant: targets.scaling_constant,
            seed: self.config.seed,
        };
        self.grow(&data.x, &data.y, &gh, data.feature_names.clone(), meta)
    }
}

/// Per-row targets of an update plus the scaling constant they used.
#[derive(Debug, Clone, PartialEq)]
pub struct StableTargets {
    pub rows: Vec<RowTargets>,
    pub scaling_constant: f64,
}

/// `w0 = f0(x)`, `phi(x)` from `f0`'s leaves and `gamma = alpha + beta phi`.
pub fn stable_targets(f0: &TreeModel, data: &Dataset, cfg: &StableLossConfig) -> Result<StableTargets> {
    if data.n_features() != f0.n_features() {
        return Err(Error::Arity {
            expected: f0.n_features(),
            got: data.n_features(),
        });
    }
    let w0 = f0.predict_matrix(&data.x)?;
    let phi = uncertainty::phi_weights(f0, &data.x, cfg.epsilon)?;
    let gamma = loss::gamma_schedule(&phi.values, cfg)?;
    let rows = data
        .y
        .iter()
        .zip(&w0)
        .zip(phi.values.iter().zip(&gamma))
        .map(|((&y, &w0), (&phi, &gamma))| RowTargets { y, w0, gamma, phi })
        .collect();
    Ok(StableTargets {
        rows,
        scaling_constant: phi.c,
    })
}

/// Fits a plain tree with a fresh CIR cache.
pub fn fit(data: &Dataset, cfg: &GrowConfig) -> Result<TreeModel> {
    Grower::new(*cfg, data.n_features())?.fit(data)
}

/// Updates `f0` on `data` with a fresh CIR cache.
pub fn update(
    f0: &TreeModel,
    data: &Dataset,
    cfg: &GrowConfig,
    loss_cfg: &StableLossConfig,
) -> Result<TreeModel> {
    Grower::new(*cfg, data.n_features())?.update(f0, data, loss_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_data(x: &[f64], y: &[f64]) -> Dataset {
        Dataset::unnamed(FeatureMatrix::new(x.to_vec(), x.len(), 1).unwrap(), y.to_vec()).unwrap()
    }

    fn cfg(stopping: Stopping, max_depth: Option<usize>, min_leaf: usize) -> GrowConfig {
        GrowConfig {
            stopping,
            max_depth,
            min_samples_leaf: min_leaf,
            cir: CirConfig {
                n_paths: 200,
                ..CirConfig::default()
            },
            seed: 1,
        }
    }

    #[test]
    fn stump_on_four_rows() {
        let d = column_data(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 2.0, 2.0]);
        let t = fit(&d, &cfg(Stopping::Off, Some(1), 1)).unwrap();
        assert_eq!(t.n_leaves(), 2);
        let w: Vec<f64> = t.leaves().map(|l| l.weight).collect();
        assert_eq!(w, vec![0.0, 2.0]);
        match t.nodes()[0] {
            Node::Split(s) => assert_eq!((s.feature, s.value), (0, 2.5)),
            _ => panic!("root should split"),
        }
    }

    #[test]
    fn single_row_is_a_leaf() {
        let d = column_data(&[3.0], &[4.5]);
        let t = fit(&d, &GrowConfig::default()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[0.0]).unwrap(), 4.5);
        let leaf = t.leaves().next().unwrap();
        assert_eq!((leaf.n_train, leaf.response_variance, leaf.prediction_variance), (1, 0.0, 0.0));

        // Shrunk toward the prior prediction when regularized.
        let f0 = TreeModel::constant(
            LeafNode {
                id: 1,
                weight: 1.5,
                n_train: 1,
                response_variance: 0.0,
                prediction_variance: 0.0,
            },
            d.feature_names.clone(),
            FitMeta::default(),
        )
        .unwrap();
        let f1 = update(&f0, &d, &GrowConfig::default(), &StableLossConfig::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(f1.predict(&[0.0]).unwrap(), 3.0);
    }

    #[test]
    fn max_depth_zero_gives_mean() {
        let d = column_data(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 6.0]);
        let t = fit(&d, &cfg(Stopping::Off, Some(0), 1)).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[2.0]).unwrap(), 3.0);
    }

    #[test]
    fn accept_split_basics() {
        let stats = NodeStats {
            n: 10,
            g_sum: 0.0,
            h_sum: 20.0,
            weight: 0.0,
            score_sq: 40.0,
        };
        let c = SplitCandidate {
            feature: 0,
            value: 0.0,
            reduction: 0.0,
            n_left: 5,
            n_right: 5,
        };
        assert!(!accept_split(&c, &stats, 1.0));
        // optimism = 2 * E[max B]
        let c = SplitCandidate { reduction: 2.5, ..c };
        assert!(accept_split(&c, &stats, 1.0));
        assert!(!accept_split(&c, &stats, 1.5));
        let c = SplitCandidate { reduction: 4.01, ..c };
        assert!(accept_split(&c, &stats, 1.5));
        let zero_h = NodeStats { h_sum: 0.0, ..stats };
        assert!(!accept_split(&c, &zero_h, 1.0));
    }

    #[test]
    fn update_rejects_arity_mismatch() {
        let d1 = column_data(&[1.0, 2.0], &[1.0, 2.0]);
        let d2 = Dataset::unnamed(
            FeatureMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(),
            alloc::vec![1.0, 2.0],
        )
        .unwrap();
        let f0 = fit(&d1, &GrowConfig::default()).unwrap();
        assert!(matches!(
            update(&f0, &d2, &GrowConfig::default(), &StableLossConfig::default()),
            Err(Error::Arity { .. })
        ));
    }

    #[test]
    fn leaves_carry_parent_selection_adjustment() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..40).map(|i| if i < 20 { 0.0 } else { 10.0 } + (i % 3) as f64).collect();
        let d = column_data(&x, &y);
        let t = fit(&d, &cfg(Stopping::Adaptive, Some(1), 2)).unwrap();
        assert_eq!(t.n_leaves(), 2);
        for leaf in t.leaves() {
            let rows: Vec<f64> = x
                .iter()
                .zip(&y)
                .filter(|(xi, _)| t.map_to_leaf(&[**xi]).unwrap() == leaf.id)
                .map(|(_, &yi)| yi)
                .collect();
            let gh: Vec<GradHess> = rows.iter().map(|&y| GradHess { g: -2.0 * y, h: 2.0 }).collect();
            let huber = uncertainty::huber_variance(&gh, leaf.weight).unwrap();
            assert!(leaf.prediction_variance > huber);
        }
    }
}
