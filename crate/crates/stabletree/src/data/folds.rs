//! Seeded row partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stabletree_core::seed;

use crate::error::{Error, Result};

fn rng(s: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(s)
}

/// Uniform random permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng(seed));
    p
}

/// `k` folds of `0..n` for one repeat. The first `n % k` folds get one extra
/// row; rows inside a fold are sorted.
pub fn k_folds(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Usage(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Usage(format!("cannot split {n} rows into {k} folds")));
    }
    let perm = permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += len;
    }
    Ok(out)
}

/// Fold assignments for each repeat; repeat `r` uses `derive(seed, [r])`.
pub fn split_folds(n: usize, k: usize, repeats: usize, seed: u64) -> Result<Vec<Vec<Vec<usize>>>> {
    (0..repeats)
        .map(|r| k_folds(n, k, seed::derive(seed, &[r as u64])))
        .collect()
}

/// Seeded uniform subset of `idx` of size `floor(len / 2)`, sorted.
pub fn half(idx: &[usize], seed: u64) -> Vec<usize> {
    sample(idx, idx.len() / 2, seed)
}

/// Seeded uniform subset of `idx` of the given size without replacement,
/// sorted.
pub fn sample(idx: &[usize], size: usize, seed: u64) -> Vec<usize> {
    let mut v = idx.to_vec();
    let (chosen, _) = v.partial_shuffle(&mut rng(seed), size.min(idx.len()));
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes() {
        let f = k_folds(10, 5, 1).unwrap();
        assert!(f.iter().all(|f| f.len() == 2));
        let f = k_folds(11, 5, 1).unwrap();
        let sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(split_folds(50, 5, 3, 9).unwrap(), split_folds(50, 5, 3, 9).unwrap());
        assert_ne!(split_folds(50, 5, 1, 9).unwrap(), split_folds(50, 5, 1, 10).unwrap());
        let r = split_folds(50, 5, 2, 9).unwrap();
        assert_ne!(r[0], r[1]);
    }

    #[test]
    fn bad_k() {
        assert!(k_folds(3, 5, 0).is_err());
        assert!(k_folds(3, 1, 0).is_err());
    }

    #[test]
    fn half_is_floor() {
        let idx: Vec<usize> = (10..21).collect();
        let h = half(&idx, 4);
        assert_eq!(h.len(), 5);
        assert!(h.windows(2).all(|w| w[0] < w[1]));
        assert!(h.iter().all(|i| idx.contains(i)));
    }
}
