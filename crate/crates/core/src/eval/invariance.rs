use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Largest distance between per-condition feature means, divided by the
/// norm of the pooled per-dimension standard deviation (the square root of
/// the trace of the pooled covariance). Zero when the pooled spread is zero.
pub fn centroid_invariance(features: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != features.rows() {
        return Err(Error::argument(alloc::format!(
            "{} labels for {} feature rows",
            labels.len(),
            features.rows()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let d = features.cols();
    let mut sums = vec![vec![0.0; d]; classes];
    let mut counts = vec![0usize; classes];
    for (row, &c) in features.iter_rows().zip(labels) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    if centroids.len() < 2 {
        return Err(Error::argument("centroid invariance needs at least two conditions"));
    }

    let n = features.rows() as f64;
    let mean: Vec<f64> = features.col_sums().as_slice().iter().map(|s| s / n).collect();
    let mut var_sum = 0.0;
    for row in features.iter_rows() {
        for (v, m) in row.iter().zip(&mean) {
            var_sum += (v - m) * (v - m);
        }
    }
    let pooled = libm::sqrt(var_sum / n);
    if pooled == 0.0 {
        return Ok(0.0);
    }

    let mut max_dist: f64 = 0.0;
    for a in 0..centroids.len() {
        for b in 0..a {
            let d2: f64 = centroids[a].iter().zip(&centroids[b]).map(|(x, y)| (x - y) * (x - y)).sum();
            max_dist = max_dist.max(libm::sqrt(d2));
        }
    }
    Ok(max_dist / pooled)
}
