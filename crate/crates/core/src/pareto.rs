//! Non-dominated filtering of `(loss, instability)` pairs, both minimized.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Flags the points no other point dominates.
///
/// `q` dominates `p` when it is no worse in both coordinates and strictly
/// better in at least one, so exact duplicates of a frontier point are all
/// flagged. Runs in `O(n log n)`.
pub fn pareto_front(points: &[(f64, f64)]) -> Result<Vec<bool>> {
    if points.iter().any(|(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(Error::NonFinite("pareto point"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
    });

    let mut flags = vec![false; points.len()];
    // Smallest instability among points with strictly smaller loss.
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let loss = points[order[start]].0;
        let mut end = start;
        while end < order.len() && points[order[end]].0 == loss {
            end += 1;
        }
        // Sorted, so the group minimum comes first.
        let group_min = points[order[start]].1;
        if group_min < best_before {
            for &i in &order[start..end] {
                if points[i].1 == group_min {
                    flags[i] = true;
                }
            }
        }
        best_before = best_before.min(group_min);
        start = end;
    }
    Ok(flags)
}

/// `true` iff `q` dominates `p`.
pub fn dominates(q: (f64, f64), p: (f64, f64)) -> bool {
    q.0 <= p.0 && q.1 <= p.1 && (q.0 < p.0 || q.1 < p.1)
}
