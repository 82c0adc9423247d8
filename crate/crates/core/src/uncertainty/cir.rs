//! Monte-Carlo estimate of the expected maximum split statistic under the
//! no-signal null.
//!
//! Under the null, the normalized loss reduction of splitting a node at data
//! fraction `pi` behaves like a squared standardized Brownian bridge. After
//! the log-odds time change `tau = ln(pi / (1 - pi))` this is a stationary CIR
//! process
//!
//! ```text
//! dS = kappa (theta - S) dtau + sigma sqrt(S) dW,   kappa = 1, theta = 1, sigma = 2
//! ```
//!
//! with a chi-squared(1) stationary law. `B_j = max_pi S_j(pi)` over feature
//! `j`'s candidate fractions, and the selection adjustment of a node is
//! `(1 + E[max_j B_j]) / 2`.
//!
//! Paths are simulated once per estimator on a fixed log-odds grid using exact
//! noncentral chi-squared transitions, one independent set of paths per
//! feature slot, and shared read-only across every node of every tree grown
//! with the estimator. A candidate fraction is mapped to its nearest grid
//! point, so adding candidates can only raise the estimate.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirConfig {
    /// Monte-Carlo replicates.
    pub n_paths: usize,
    /// Points on the log-odds grid.
    pub grid_size: usize,
    /// The grid spans `[-tau_max, tau_max]` in log-odds.
    pub tau_max: f64,
}

impl Default for CirConfig {
    fn default() -> Self {
        Self {
            n_paths: 1000,
            grid_size: 100,
            tau_max: 10.0,
        }
    }
}

/// `dS = kappa (theta - S) dt + sigma sqrt(S) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirProcess {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl CirProcess {
    /// Squared standardized Brownian bridge in log-odds time.
    pub const SQUARED_BRIDGE: CirProcess = CirProcess {
        kappa: 1.0,
        theta: 1.0,
        sigma: 2.0,
    };

    pub fn degrees_of_freedom(&self) -> f64 {
        4.0 * self.kappa * self.theta / (self.sigma * self.sigma)
    }

    /// Draw from the stationary law `sigma^2 / (4 kappa) * chi2(d)`.
    pub fn sample_stationary<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let scale = self.sigma * self.sigma / (4.0 * self.kappa);
        let chi = ChiSquared::new(self.degrees_of_freedom()).expect("positive degrees of freedom");
        scale * chi.sample(rng)
    }

    /// Exact transition `S(t + dt) | S(t) = s`.
    pub fn step<R: rand::Rng + ?Sized>(&self, s: f64, dt: f64, rng: &mut R) -> f64 {
        let decay = libm::exp(-self.kappa * dt);
        let c = self.sigma * self.sigma * (1.0 - decay) / (4.0 * self.kappa);
        let lambda = s * decay / c;
        c * noncentral_chi_squared(self.degrees_of_freedom(), lambda, rng)
    }
}

/// Noncentral chi-squared draw with `df > 0` degrees of freedom and
/// noncentrality `lambda >= 0`.
pub fn noncentral_chi_squared<R: rand::Rng + ?Sized>(df: f64, lambda: f64, rng: &mut R) -> f64 {
    if df >= 1.0 {
        let z: f64 = StandardNormal.sample(rng);
        let shifted = z + libm::sqrt(lambda);
        let rest = if df > 1.0 {
            ChiSquared::new(df - 1.0).expect("positive degrees of freedom").sample(rng)
        } else {
            0.0
        };
        shifted * shifted + rest
    } else {
        // Poisson mixture of central chi-squared laws.
        let k = if lambda > 0.0 {
            Poisson::new(lambda / 2.0).expect("positive rate").sample(rng)
        } else {
            0.0
        };
        ChiSquared::new(df + 2.0 * k).expect("positive degrees of freedom").sample(rng)
    }
}

/// Candidate split fractions seen during one node's split search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitContext {
    features: Vec<(usize, Vec<f64>)>,
}

impl SplitContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the candidate fractions `n_left / n_node` of one feature.
    /// Features without candidates are ignored.
    pub fn push_feature(&mut self, feature: usize, fractions: Vec<f64>) {
        if !fractions.is_empty() {
            self.features.push((feature, fractions));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_candidates(&self) -> usize {
        self.features.iter().map(|(_, f)| f.len()).sum()
    }

    pub fn features(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.features.iter().map(|(j, f)| (*j, f.as_slice()))
    }
}

/// Cached CIR paths plus the estimator of `E[max_j B_j]`.
#[derive(Debug, Clone)]
pub struct CirEstimator {
    config: CirConfig,
    process: CirProcess,
    seed: u64,
    n_features: usize,
    step: f64,
    /// Layout `[feature][path][grid]`.
    paths: Vec<f64>,
}

impl CirEstimator {
    pub fn new(config: CirConfig, n_features: usize, seed: u64) -> Result<Self> {
        Self::with_process(config, CirProcess::SQUARED_BRIDGE, n_features, seed)
    }

    pub fn with_process(
        config: CirConfig,
        process: CirProcess,
        n_features: usize,
        seed: u64,
    ) -> Result<Self> {
        if config.n_paths == 0 {
            return Err(Error::Invalid("n_paths must be >= 1".into()));
        }
        if config.grid_size < 2 {
            return Err(Error::Invalid("grid_size must be >= 2".into()));
        }
        if !(config.tau_max.is_finite() && config.tau_max > 0.0) {
            return Err(Error::Invalid("tau_max must be > 0".into()));
        }
        let g = config.grid_size;
        let step = 2.0 * config.tau_max / (g - 1) as f64;
        let mut paths = vec![0.0; n_features * config.n_paths * g];
        for (j, slot) in paths.chunks_mut(config.n_paths * g).enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[j as u64]));
            for path in slot.chunks_mut(g) {
                let mut s = process.sample_stationary(&mut rng);
                path[0] = s;
                for v in &mut path[1..] {
                    s = process.step(s, step, &mut rng);
                    *v = s;
                }
            }
        }
        Ok(Self {
            config,
            process,
            seed,
            n_features,
            step,
            paths,
        })
    }

    pub fn config(&self) -> &CirConfig {
        &self.config
    }

    pub fn process(&self) -> &CirProcess {
        &self.process
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Nearest grid index of a split fraction in `(0, 1)`.
    pub fn grid_index(&self, fraction: f64) -> usize {
        let tau = libm::log(fraction / (1.0 - fraction));
        let pos = (tau + self.config.tau_max) / self.step;
        if !(pos > 0.0) {
            0
        } else {
            (libm::round(pos) as usize).min(self.config.grid_size - 1)
        }
    }

    /// Sorted distinct grid indices per feature.
    fn index_sets(&self, ctx: &SplitContext) -> Vec<(usize, Vec<usize>)> {
        ctx.features()
            .map(|(j, fractions)| {
                assert!(
                    j < self.n_features,
                    "feature {j} has no CIR path slot ({} slots)",
                    self.n_features
                );
                let mut idx: Vec<usize> = fractions.iter().map(|&f| self.grid_index(f)).collect();
                idx.sort_unstable();
                idx.dedup();
                (j, idx)
            })
            .collect()
    }

    /// Monte-Carlo mean of `max_j max_pi S_j(pi)` and its standard error.
    /// Returns `None` when the context has no candidates.
    pub fn expected_max_with_se(&self, ctx: &SplitContext) -> Option<(f64, f64)> {
        if ctx.is_empty() {
            return None;
        }
        let sets = self.index_sets(ctx);
        let g = self.config.grid_size;
        let n = self.config.n_paths;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for p in 0..n {
            let mut best = f64::NEG_INFINITY;
            for (j, idx) in &sets {
                let base = (j * n + p) * g;
                let path = &self.paths[base..base + g];
                for &i in idx {
                    if path[i] > best {
                        best = path[i];
                    }
                }
            }
            sum += best;
            sum_sq += best * best;
        }
        let mean = sum / n as f64;
        let var = if n > 1 {
            ((sum_sq - n as f64 * mean * mean) / (n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        Some((mean, libm::sqrt(var / n as f64)))
    }

    /// Estimate of `E[max_j B_j]`, floored at 1 (the stationary mean).
    /// Zero candidates give 1.
    pub fn expected_max(&self, ctx: &SplitContext) -> f64 {
        self.expected_max_with_se(ctx).map_or(1.0, |(m, _)| m.max(1.0))
    }

    /// Selection adjustment `(1 + E[max_j B_j]) / 2`; exactly 1 without
    /// candidates.
    pub fn adjustment(&self, ctx: &SplitContext) -> f64 {
        if ctx.is_empty() {
            return 1.0;
        }
        (1.0 + self.expected_max(ctx)) / 2.0
    }
}
