//! Fresh condition classifiers trained on frozen features.
//!
//! The co-trained adversarial head can sit at chance while the features
//! still separate conditions, so condition leakage is measured with a new
//! classifier of the same shape trained from scratch.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::loss::condition_loss_grad;
use crate::net::{DenseStack, DEFAULT_HEAD_HIDDEN};
use crate::tensor::{softmax_rows, Matrix, Rng};

/// RNG stream for probe initialization and the probe's own train/test split.
pub const PROBE_STREAM: u64 = 0x5052_4F42;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ProbeConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fraction of frames (per condition) the probe trains on; the rest is held out.
    pub train_fraction: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { hidden: DEFAULT_HEAD_HIDDEN.to_vec(), lr: 0.05, epochs: 20, batch_size: 32, seed: 7, train_fraction: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeOutcome {
    /// Held-out accuracy.
    pub accuracy: f64,
    /// Largest condition prior on the held-out frames.
    pub chance: f64,
}

/// Trains a fresh classifier on a stratified share of `(features, labels)`
/// and returns its accuracy on the rest. Features are used as given, the way
/// the co-trained head sees them.
pub fn train_probe(features: &Matrix, labels: &[usize], config: &ProbeConfig) -> Result<ProbeOutcome> {
    if labels.len() != features.rows() {
        return Err(Error::argument("one label per feature row is required"));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if by_class.iter().filter(|c| !c.is_empty()).count() < 2 {
        return Err(Error::argument("probe labels contain a single class"));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) || config.batch_size == 0 || !(config.lr > 0.0) {
        return Err(Error::argument("probe config needs 0 < train_fraction < 1, batch_size >= 1, lr > 0"));
    }

    let mut rng = Rng::stream(config.seed, PROBE_STREAM);
    let (mut train_idx, mut test_idx) = (Vec::new(), Vec::new());
    for members in &mut by_class {
        rng.shuffle(members);
        let k = libm::round(members.len() as f64 * config.train_fraction) as usize;
        train_idx.extend_from_slice(&members[..k]);
        test_idx.extend_from_slice(&members[k..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::argument("too few frames to hold out a probe test set"));
    }

    let (x_train, x_test) = (features.gather_rows(&train_idx), features.gather_rows(&test_idx));
    let y_train: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let y_test: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();

    let mut dims = vec![features.cols()];
    dims.extend_from_slice(&config.hidden);
    dims.push(classes);
    let mut net = DenseStack::glorot(&dims, false, &mut rng);
    let mut order: Vec<usize> = (0..x_train.rows()).collect();
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let xb = x_train.gather_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y_train[i]).collect();
            let (logits, cache) = net.forward_cached(&xb)?;
            let g = condition_loss_grad(&softmax_rows(&logits), &yb)?.scale(1.0 / batch.len() as f64);
            let (_, grads) = net.backward(&g, &cache)?;
            net.apply_sgd(&grads, config.lr)?;
        }
    }

    let pred = net.forward(&x_test)?.argmax_rows();
    let correct = pred.iter().zip(&y_test).filter(|(p, y)| p == y).count();
    let mut counts = vec![0usize; classes];
    for &y in &y_test {
        counts[y] += 1;
    }
    let n = y_test.len() as f64;
    Ok(ProbeOutcome {
        accuracy: correct as f64 / n,
        chance: *counts.iter().max().unwrap() as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_rejected() {
        let f = Matrix::zeros(10, 2);
        assert!(matches!(train_probe(&f, &[1; 10], &ProbeConfig::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn separable_features_are_learned() {
        let mut rng = Rng::new(3);
        let n = 400;
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut f = Matrix::zeros(n, 3);
        for (i, &l) in labels.iter().enumerate() {
            let shift = if l == 1 { 3.0 } else { 0.0 };
            for j in 0..3 {
                f.set(i, j, rng.normal() + shift);
            }
        }
        let out = train_probe(&f, &labels, &ProbeConfig::default()).unwrap();
        assert!(out.accuracy > 0.95, "{out:?}");
        assert!((out.chance - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = Rng::new(4);
        let f = crate::tensor::rng_uniform(&mut rng, -1.0, 1.0, 100, 2).unwrap();
        let labels: Vec<usize> = (0..100).map(|i| i % 3).collect();
        let c = ProbeConfig { epochs: 3, ..Default::default() };
        assert_eq!(train_probe(&f, &labels, &c).unwrap(), train_probe(&f, &labels, &c).unwrap());
    }
}
