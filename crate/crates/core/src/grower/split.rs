use alloc::vec::Vec;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::loss::GradHess;
use crate::uncertainty::SplitContext;

/// Reductions at or below this fraction of the children's score are treated
/// as zero (rounding noise on constant responses).
const REL_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub value: f64,
    /// Second-order loss reduction
    /// `1/2 [G_l^2/H_l + G_r^2/H_r - G^2/H]`.
    pub reduction: f64,
    pub n_left: usize,
    pub n_right: usize,
}

/// Result of scanning every feature at one node.
#[derive(Debug, Clone, Default)]
pub struct SplitSearch {
    pub best: Option<SplitCandidate>,
    pub context: SplitContext,
}

/// Second-order reduction of a partition given its gradient/Hessian sums.
#[inline]
pub fn reduction(g_left: f64, h_left: f64, g_total: f64, h_total: f64) -> (f64, f64) {
    let g_right = g_total - g_left;
    let h_right = h_total - h_left;
    let children = g_left * g_left / h_left + g_right * g_right / h_right;
    (0.5 * (children - g_total * g_total / h_total), children)
}

/// Midpoint of two consecutive distinct values, kept inside `[a, b)`.
#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let s = 0.5 * a + 0.5 * b;
    if s >= a && s < b {
        s
    } else {
        a
    }
}

pub(crate) fn check_grad_hess(gh: &[GradHess]) -> Result<()> {
    for x in gh {
        if !(x.g.is_finite() && x.h.is_finite()) {
            return Err(Error::NonFinite("gradient/hessian"));
        }
        if !(x.h > 0.0) {
            return Err(Error::Invalid(alloc::format!("hessian must be > 0, got {}", x.h)));
        }
    }
    Ok(())
}

/// Scans all features with one prefix-sum sweep each.
///
/// Candidates are midpoints between consecutive distinct sorted values that
/// leave at least `min_samples_leaf` rows on both sides. Ties in reduction go
/// to the lowest feature index, then the lowest split value. Only candidates
/// with strictly positive reduction are returned.
pub(crate) fn search(
    rows: &[usize],
    x: &FeatureMatrix,
    gh: &[GradHess],
    min_samples_leaf: usize,
    scratch: &mut Vec<(f64, usize)>,
) -> SplitSearch {
    let n = rows.len();
    let mut out = SplitSearch::default();
    let min_leaf = min_samples_leaf.max(1);
    if n < 2 * min_leaf {
        return out;
    }
    let (g_total, h_total) = rows
        .iter()
        .fold((0.0, 0.0), |(g, h), &i| (g + gh[i].g, h + gh[i].h));

    for j in 0..x.n_cols() {
        scratch.clear();
        scratch.extend(rows.iter().map(|&i| (x.get(i, j), i)));
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut fractions = Vec::new();
        let (mut g_left, mut h_left) = (0.0, 0.0);
        for k in 0..n - 1 {
            let (v, i) = scratch[k];
            g_left += gh[i].g;
            h_left += gh[i].h;
            let n_left = k + 1;
            let next = scratch[k + 1].0;
            if v == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            fractions.push(n_left as f64 / n as f64);
            let (red, children) = reduction(g_left, h_left, g_total, h_total);
            if !(red > REL_TOL * children.abs()) {
                continue;
            }
            // Reductions within rounding of the incumbent count as ties, so
            // the same partition reached through another feature or another
            // summation order never displaces the earlier candidate.
            if out.best.map_or(true, |b| red > b.reduction + TIE_TOL * children.abs()) {
                out.best = Some(SplitCandidate {
                    feature: j,
                    value: midpoint(v, next),
                    reduction: red,
                    n_left,
                    n_right: n - n_left,
                });
            }
        }
        out.context.push_feature(j, fractions);
    }
    out
}

/// Best split of `rows`, or `None` if no admissible candidate reduces the
/// loss.
pub fn best_split(
    rows: &[usize],
    x: &FeatureMatrix,
    gh: &[GradHess],
    min_samples_leaf: usize,
) -> Result<Option<SplitCandidate>> {
    if gh.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            left: gh.len(),
            right: x.n_rows(),
        });
    }
    if let Some(&bad) = rows.iter().find(|&&i| i >= x.n_rows()) {
        return Err(Error::Invalid(alloc::format!("row index {bad} out of range")));
    }
    check_grad_hess(gh)?;
    let mut scratch = Vec::with_capacity(rows.len());
    Ok(search(rows, x, gh, min_samples_leaf, &mut scratch).best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn plain(y: &[f64]) -> Vec<GradHess> {
        y.iter().map(|&y| GradHess { g: -2.0 * y, h: 2.0 }).collect()
    }

    fn column(x: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(x.to_vec(), x.len(), 1).unwrap()
    }

    #[test]
    fn four_row_step() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let gh = plain(&[0.0, 0.0, 2.0, 2.0]);
        let c = best_split(&[0, 1, 2, 3], &x, &gh, 1).unwrap().unwrap();
        assert_eq!(c.feature, 0);
        assert_eq!(c.value, 2.5);
        assert!((c.reduction - 4.0).abs() < 1e-12);
        assert_eq!((c.n_left, c.n_right), (2, 2));
    }

    #[test]
    fn constant_response_has_no_split() {
        let x = column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        for y in [0.0, 1.7, -3.3e5, 0.1] {
            let gh = plain(&[y; 6]);
            assert_eq!(best_split(&[0, 1, 2, 3, 4, 5], &x, &gh, 1).unwrap(), None);
        }
    }

    #[test]
    fn constant_feature_contributes_nothing() {
        let x = FeatureMatrix::from_rows(&[[5.0, 1.0], [5.0, 2.0], [5.0, 3.0], [5.0, 4.0]]).unwrap();
        let gh = plain(&[0.0, 1.0, 5.0, 6.0]);
        let mut scratch = Vec::new();
        let s = search(&[0, 1, 2, 3], &x, &gh, 1, &mut scratch);
        assert_eq!(s.best.unwrap().feature, 1);
        let feats: Vec<usize> = s.context.features().map(|(j, _)| j).collect();
        assert_eq!(feats, vec![1]);
        assert_eq!(s.context.n_candidates(), 3);
    }

    #[test]
    fn ties_go_to_lowest_feature_then_value() {
        // Both features order the rows identically.
        let x = FeatureMatrix::from_rows(&[[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0]]).unwrap();
        let gh = plain(&[0.0, 0.0, 2.0, 2.0]);
        let c = best_split(&[0, 1, 2, 3], &x, &gh, 1).unwrap().unwrap();
        assert_eq!(c.feature, 0);
        // Mirror-symmetric response: splits at 1.5 and 3.5 reduce equally.
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let gh = plain(&[1.0, 0.0, 0.0, 1.0]);
        let c = best_split(&[0, 1, 2, 3], &x, &gh, 1).unwrap().unwrap();
        assert_eq!(c.value, 1.5);
    }

    #[test]
    fn min_leaf_limits_candidates() {
        let x = column(&[1.0, 2.0, 3.0, 4.0]);
        let gh = plain(&[9.0, 0.0, 0.0, 0.0]);
        let c = best_split(&[0, 1, 2, 3], &x, &gh, 2).unwrap().unwrap();
        assert_eq!(c.value, 2.5);
        assert_eq!(best_split(&[0, 1, 2], &x, &gh, 2).unwrap(), None);
    }

    #[test]
    fn rejects_non_finite_grad_hess() {
        let x = column(&[1.0, 2.0]);
        let gh = vec![GradHess { g: f64::NAN, h: 2.0 }, GradHess { g: 0.0, h: 2.0 }];
        assert!(matches!(best_split(&[0, 1], &x, &gh, 1), Err(Error::NonFinite(_))));
    }

    #[test]
    fn midpoint_stays_between_neighbours() {
        let a: f64 = 1.0;
        let b = f64::from_bits(a.to_bits() + 1);
        let s = midpoint(a, b);
        assert!(s >= a && s < b);
        assert_eq!(midpoint(-1e308, 1e308), 0.0);
    }
}
