//! Regression trees grown with a second-order greedy split search, plus the
//! machinery to update a fitted tree under a stability-regularized loss.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, data loading and
//! the experiment harness live in the `stabletree` companion crate.
//!
//! Layout:
//!
//! * [`tree`]: tree model, routing and prediction.
//! * [`loss`]: stable loss kernels, leaf weights, instability metrics and the
//!   per-row regularization schedule.
//! * [`grower`]: split search, adaptive stopping, `fit` and `update`.
//! * [`uncertainty`]: leaf prediction variance, the CIR selection adjustment
//!   and the uncertainty weights used by the update.
//! * [`pareto`]: non-dominated filtering of (loss, instability) pairs.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod grower;
pub mod loss;
pub mod pareto;
pub mod seed;
pub mod tree;
pub mod uncertainty;

pub use data::{Dataset, FeatureMatrix};
pub use error::{Error, Result};
pub use grower::{GrowConfig, Grower, SplitCandidate, Stopping};
pub use loss::{GradHess, InstabilityKind, LossKind, RowTargets, StableLossConfig};
pub use tree::{FitMeta, LeafNode, Node, SplitNode, TreeModel};
pub use uncertainty::{CirConfig, CirEstimator};
