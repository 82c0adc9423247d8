//! Uncertainty of a fitted tree's leaf predictions and the weights derived
//! from it.
//!
//! A leaf's prediction variance is the Huber sandwich term
//! `sum((g + h w)^2) / sum(h)^2` scaled by a selection adjustment
//! `(1 + E[max_j B_j]) / 2`, where `B_j` is the maximum of a CIR process over
//! the candidate split fractions of feature `j` at the node that created the
//! leaf. The uncertainty weight of a row is `phi(x) = c / (n(x) var(x) + eps)`.

mod cir;
mod phi;
mod variance;

pub use cir::{noncentral_chi_squared, CirConfig, CirEstimator, CirProcess, SplitContext};
pub use phi::{phi, phi_value, phi_weights, scaling_constant, PhiWeights};
pub use variance::{huber_variance, leaf_prediction_variance, response_variance, LeafVariance};
