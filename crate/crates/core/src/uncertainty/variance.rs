use crate::error::{Error, Result};
use crate::loss::GradHess;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafVariance {
    pub huber_term: f64,
    pub adjustment: f64,
    /// `huber_term * adjustment`.
    pub variance: f64,
}

/// Huber sandwich variance of the Newton weight `weight` over a leaf's rows.
pub fn huber_variance(gh: &[GradHess], weight: f64) -> Result<f64> {
    if gh.is_empty() {
        return Err(Error::Empty("leaf rows"));
    }
    let mut h_sum = 0.0;
    let mut score_sq = 0.0;
    for x in gh {
        let s = x.g + x.h * weight;
        score_sq += s * s;
        h_sum += x.h;
    }
    if h_sum == 0.0 {
        return Err(Error::ZeroHessian);
    }
    Ok(score_sq / (h_sum * h_sum))
}

pub fn leaf_prediction_variance(gh: &[GradHess], weight: f64, adjustment: f64) -> Result<LeafVariance> {
    if !(adjustment >= 1.0 && adjustment.is_finite()) {
        return Err(Error::Invalid(alloc::format!("adjustment must be >= 1, got {adjustment}")));
    }
    let huber_term = huber_variance(gh, weight)?;
    Ok(LeafVariance {
        huber_term,
        adjustment,
        variance: huber_term * adjustment,
    })
}

/// Population variance (divisor `n`); zero for fewer than two values.
pub fn response_variance(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}
