//! Stable loss kernels.
//!
//! The update objective for row `i` is
//!
//! ```text
//! L_SL(y, w; w0) = (y - w)^2 + gamma_i * (w0 - w)^2
//! ```
//!
//! where `w0` is the prior tree's prediction. Gradients and Hessians are
//! taken at `w = 0`, so a leaf weight is the Newton step `-sum(g) / sum(h)`.
//! No 1/2 factor is used anywhere; the Newton step is invariant to it.

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    SquaredError,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::SquaredError => "squared_error",
        }
    }
}

/// Pointwise discrepancy `S(a, b)` between two models' predictions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InstabilityKind {
    #[default]
    SquaredError,
    AbsoluteError,
    /// `-1` when `|a - b| <= k`, else `0`.
    NegCoverage { k: f64 },
}

impl InstabilityKind {
    pub fn name(self) -> &'static str {
        match self {
            InstabilityKind::SquaredError => "squared_error",
            InstabilityKind::AbsoluteError => "absolute_error",
            InstabilityKind::NegCoverage { .. } => "neg_coverage",
        }
    }

    #[inline]
    pub fn pointwise(self, a: f64, b: f64) -> f64 {
        match self {
            InstabilityKind::SquaredError => (a - b) * (a - b),
            InstabilityKind::AbsoluteError => libm::fabs(a - b),
            InstabilityKind::NegCoverage { k } => {
                if libm::fabs(a - b) <= k {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Regularization settings: `gamma_i = alpha + beta * phi_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub loss: LossKind,
    pub instability: InstabilityKind,
}

impl Default for StableLossConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            epsilon: DEFAULT_EPSILON,
            loss: LossKind::SquaredError,
            instability: InstabilityKind::SquaredError,
        }
    }
}

impl StableLossConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            beta,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Invalid(alloc::format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Invalid(alloc::format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Invalid(alloc::format!("epsilon must be finite and > 0, got {}", self.epsilon)));
        }
        if let InstabilityKind::NegCoverage { k } = self.instability {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::Invalid(alloc::format!("coverage band k must be > 0, got {k}")));
            }
        }
        Ok(())
    }

    pub fn is_baseline(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    #[inline]
    pub fn gamma(&self, phi: f64) -> f64 {
        self.alpha + self.beta * phi
    }
}

/// Everything the loss needs to know about one training row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowTargets {
    pub y: f64,
    /// Prior model prediction `f0(x)`.
    pub w0: f64,
    pub gamma: f64,
    pub phi: f64,
}

impl RowTargets {
    /// A row of a plain (unregularized) fit.
    pub fn plain(y: f64) -> Self {
        Self {
            y,
            w0: 0.0,
            gamma: 0.0,
            phi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradHess {
    pub g: f64,
    pub h: f64,
}

/// `L_SL(y, w; w0)` for a single row.
#[inline]
pub fn stable_loss(row: &RowTargets, w: f64) -> f64 {
    let r = row.y - w;
    let d = row.w0 - w;
    r * r + row.gamma * d * d
}

/// Gradient and Hessian of the stable loss at `w = 0`.
pub fn grad_hess(row: &RowTargets, cfg: &StableLossConfig) -> Result<GradHess> {
    match cfg.instability {
        InstabilityKind::SquaredError => {}
        other => return Err(Error::UnsupportedPenalty(other.name())),
    }
    if !(row.y.is_finite() && row.w0.is_finite()) {
        return Err(Error::NonFinite("row targets"));
    }
    if !(row.gamma.is_finite() && row.gamma >= 0.0) {
        return Err(Error::Invalid(alloc::format!("gamma must be finite and >= 0, got {}", row.gamma)));
    }
    Ok(GradHess {
        g: -2.0 * (row.y + row.gamma * row.w0),
        h: 2.0 * (1.0 + row.gamma),
    })
}

pub fn grad_hess_all(rows: &[RowTargets], cfg: &StableLossConfig) -> Result<Vec<GradHess>> {
    rows.iter().map(|r| grad_hess(r, cfg)).collect()
}

/// Newton weight `-sum(g) / sum(h)` over a set of rows.
pub fn newton_weight(gh: &[GradHess]) -> Result<f64> {
    if gh.is_empty() {
        return Err(Error::Empty("leaf rows"));
    }
    let (g, h) = gh.iter().fold((0.0, 0.0), |(g, h), x| (g + x.g, h + x.h));
    if h == 0.0 {
        return Err(Error::ZeroHessian);
    }
    Ok(-g / h)
}

/// Minimizer of the summed stable loss over `rows`.
///
/// For squared error this is `sum(y + gamma * w0) / sum(1 + gamma)`.
pub fn leaf_weight(rows: &[RowTargets], cfg: &StableLossConfig) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Empty("leaf rows"));
    }
    newton_weight(&grad_hess_all(rows, cfg)?)
}

/// Mean pointwise instability between two prediction vectors.
pub fn instability(pred0: &[f64], pred1: &[f64], kind: InstabilityKind) -> Result<f64> {
    if pred0.len() != pred1.len() {
        return Err(Error::LengthMismatch {
            left: pred0.len(),
            right: pred1.len(),
        });
    }
    if pred0.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let s: f64 = pred0
        .iter()
        .zip(pred1)
        .map(|(&a, &b)| kind.pointwise(a, b))
        .sum();
    Ok(s / pred0.len() as f64)
}

/// Mean squared error of `pred` against `y`.
pub fn mean_squared_error(pred: &[f64], y: &[f64]) -> Result<f64> {
    instability(pred, y, InstabilityKind::SquaredError)
}

/// `gamma_i = alpha + beta * phi_i`.
pub fn gamma_schedule(phi: &[f64], cfg: &StableLossConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    phi.iter()
        .map(|&p| {
            if !p.is_finite() {
                Err(Error::NonFinite("phi"))
            } else if p < 0.0 {
                Err(Error::Invalid(alloc::format!("phi must be >= 0, got {p}")))
            } else {
                Ok(cfg.gamma(p))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn row(y: f64, w0: f64, gamma: f64) -> RowTargets {
        RowTargets {
            y,
            w0,
            gamma,
            phi: 0.0,
        }
    }

    #[test]
    fn grad_hess_examples() {
        let cfg = StableLossConfig::default();
        assert_eq!(grad_hess(&row(1.0, 0.0, 0.0), &cfg).unwrap(), GradHess { g: -2.0, h: 2.0 });
        assert_eq!(grad_hess(&row(1.0, 2.0, 1.0), &cfg).unwrap(), GradHess { g: -6.0, h: 4.0 });
        assert_eq!(grad_hess(&row(0.0, 0.0, 5.0), &cfg).unwrap(), GradHess { g: 0.0, h: 12.0 });
    }

    #[test]
    fn grad_hess_rejects_non_smooth_penalties() {
        for kind in [InstabilityKind::AbsoluteError, InstabilityKind::NegCoverage { k: 1.0 }] {
            let cfg = StableLossConfig {
                instability: kind,
                ..Default::default()
            };
            assert!(matches!(
                grad_hess(&row(1.0, 0.0, 0.0), &cfg),
                Err(Error::UnsupportedPenalty(_))
            ));
        }
    }

    #[test]
    fn leaf_weight_examples() {
        let cfg = StableLossConfig::new(1.0, 0.0).unwrap();
        let rows = [row(1.0, 2.0, 1.0), row(3.0, 2.0, 1.0)];
        assert_eq!(leaf_weight(&rows, &cfg).unwrap(), 2.0);
        let rows = [row(0.0, 0.0, 1.0), row(4.0, 0.0, 1.0)];
        assert_eq!(leaf_weight(&rows, &cfg).unwrap(), 1.0);
        let rows = [row(1.0, 9.0, 0.0), row(2.0, -3.0, 0.0), row(6.0, 0.5, 0.0)];
        assert_eq!(leaf_weight(&rows, &cfg).unwrap(), 3.0);
        assert_eq!(leaf_weight(&[], &cfg), Err(Error::Empty("leaf rows")));
    }

    #[test]
    fn instability_examples() {
        let p = [0.3, -2.0, 5.0];
        assert_eq!(instability(&p, &p, InstabilityKind::SquaredError).unwrap(), 0.0);
        assert_eq!(instability(&p, &p, InstabilityKind::AbsoluteError).unwrap(), 0.0);
        assert_eq!(instability(&p, &p, InstabilityKind::NegCoverage { k: 0.1 }).unwrap(), -1.0);
        assert_eq!(
            instability(&[0.0, 0.0], &[1.0, 3.0], InstabilityKind::SquaredError).unwrap(),
            5.0
        );
        assert_eq!(
            instability(&[0.0, 0.0], &[1.0, 3.0], InstabilityKind::AbsoluteError).unwrap(),
            2.0
        );
        assert_eq!(instability(&[0.0], &[2.0], InstabilityKind::NegCoverage { k: 1.0 }).unwrap(), 0.0);
        assert!(matches!(
            instability(&[0.0], &[1.0, 2.0], InstabilityKind::SquaredError),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gamma_schedule_examples() {
        let c = StableLossConfig::new(0.2, 0.0).unwrap();
        assert_eq!(gamma_schedule(&[0.0, 7.0, 1e3], &c).unwrap(), vec![0.2; 3]);
        let c = StableLossConfig::new(0.0, 1.0).unwrap();
        assert_eq!(gamma_schedule(&[0.5, 2.0], &c).unwrap(), vec![0.5, 2.0]);
        let c = StableLossConfig::new(0.4, 0.6).unwrap();
        assert_eq!(gamma_schedule(&[1.0, 1.0], &c).unwrap(), vec![1.0, 1.0]);
        let c = StableLossConfig::default();
        assert_eq!(gamma_schedule(&[3.0, 0.1], &c).unwrap(), vec![0.0, 0.0]);
        assert!(gamma_schedule(&[-1.0], &c).is_err());
        assert!(gamma_schedule(&[f64::INFINITY], &c).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(StableLossConfig::new(-0.1, 0.0).is_err());
        assert!(StableLossConfig::new(0.0, f64::NAN).is_err());
        assert!(StableLossConfig::default().with_epsilon(0.0).is_err());
        assert_eq!(StableLossConfig::default().epsilon, 0.01);
    }
}
