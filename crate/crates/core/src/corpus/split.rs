use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};

/// Deterministic split stratified by (class, condition labels).
///
/// Frames are ordered by stratum key and then by original index, and dealt
/// to the split with the largest shortfall against its quota. Each split
/// keeps its frames in original order.
pub fn split(corpus: &ParallelCorpus, fractions: &[f64]) -> Result<Vec<ParallelCorpus>> {
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::argument(format!("split fractions must be positive, got {fractions:?}")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::argument(format!("split fractions sum to {total}, expected 1")));
    }

    let n = corpus.len();
    let factors = corpus.spec().factors.len();
    let key = |i: usize| -> Vec<usize> {
        let mut k = Vec::with_capacity(factors + 1);
        k.push(corpus.task_labels().map_or(0, |y| y[i]));
        for r in 0..factors {
            k.push(corpus.condition_labels(r).map_or(0, |c| c[i]));
        }
        k
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_cached_key(|&i| (key(i), i));

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); fractions.len()];
    for (p, &i) in order.iter().enumerate() {
        let seen = (p + 1) as f64;
        let mut best = 0;
        let mut best_gap = f64::NEG_INFINITY;
        for (j, (&f, b)) in fractions.iter().zip(&buckets).enumerate() {
            let gap = f * seen - b.len() as f64;
            if gap > best_gap {
                best_gap = gap;
                best = j;
            }
        }
        buckets[best].push(i);
    }
    Ok(buckets
        .into_iter()
        .map(|mut idx| {
            idx.sort_unstable();
            corpus.subset(&idx)
        })
        .collect())
}
