use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{CorpusSpec, ParallelCorpus};
use crate::error::Result;
use crate::tensor::{Matrix, Rng};

const LABEL_STREAM: u64 = 0x4C41_0000;
const SOURCE_STREAM: u64 = 0x5352_0000;
const TRANSFORM_STREAM: u64 = 0x5846_0000;
const TARGET_NOISE_STREAM: u64 = 0x544E_0000;

/// Per-factor, per-condition distortion offsets.
///
/// A frame with labels `(a_1, ..., a_R)` is moved by `x ↦ x + Σ_r s_r g^r_{a_r}`
/// with unit-length `g`, so `s_r` is the shift length, every joint condition
/// gets its own translation, and a factor with `s_r = 0` leaves no trace. The offsets only touch coordinates outside the
/// class-mean span: the shift is visible to a classifier but can be dropped
/// without losing class evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionTransforms {
    /// `[factor][condition] -> g`; `None` for identity conditions.
    offsets: Vec<Vec<Option<Vec<f64>>>>,
    strengths: Vec<f64>,
}

impl ConditionTransforms {
    pub fn generate(spec: &CorpusSpec) -> Self {
        let d = spec.input_dim;
        let mut offsets = Vec::with_capacity(spec.factors.len());
        for (r, f) in spec.factors.iter().enumerate() {
            let mut rng = Rng::stream(spec.seed, TRANSFORM_STREAM + r as u64);
            let mut conds = Vec::with_capacity(f.cardinality);
            for a in 0..f.cardinality {
                // Draw for every condition so a condition's offset does not depend
                // on whether label 0 is the identity.
                let mut g: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                for v in g.iter_mut().take(spec.n_classes) {
                    *v = 0.0;
                }
                let norm = libm::sqrt(g.iter().map(|v| v * v).sum::<f64>());
                if norm > 0.0 {
                    g.iter_mut().for_each(|v| *v /= norm);
                }
                let identity = spec.include_identity_condition && a == 0;
                conds.push((!identity).then_some(g));
            }
            offsets.push(conds);
        }
        Self { offsets, strengths: spec.factors.iter().map(|f| f.transform_strength).collect() }
    }

    /// True when no factor moves a frame carrying these labels.
    pub fn is_identity(&self, labels: &[usize]) -> bool {
        self.offsets
            .iter()
            .zip(labels)
            .zip(&self.strengths)
            .all(|((p, &a), &s)| s == 0.0 || p[a].is_none())
    }

    /// Distorts one source row for the given per-factor labels.
    pub fn apply(&self, x: &[f64], labels: &[usize]) -> Vec<f64> {
        let mut out = x.to_vec();
        for ((p, &a), &s) in self.offsets.iter().zip(labels).zip(&self.strengths) {
            let Some(g) = &p[a] else { continue };
            if s == 0.0 {
                continue;
            }
            for (o, gj) in out.iter_mut().zip(g) {
                *o += s * gj;
            }
        }
        out
    }
}

/// Balanced labels `i mod k`, shuffled.
fn balanced_labels(n: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).map(|i| i % k).collect();
    rng.shuffle(&mut v);
    v
}

/// Class `k` mean: `(separation / √2)·e_k`, so every pair of means is
/// `separation` apart.
pub(crate) fn class_mean(spec: &CorpusSpec, class: usize) -> Vec<f64> {
    let mut m = vec![0.0; spec.input_dim];
    m[class] = spec.class_separation / core::f64::consts::SQRT_2;
    m
}

/// Deterministic corpus from `spec`.
pub fn generate(spec: &CorpusSpec) -> Result<ParallelCorpus> {
    spec.validate()?;
    let n = spec.n_frames;
    let d = spec.input_dim;

    let mut label_rng = Rng::stream(spec.seed, LABEL_STREAM);
    let y = balanced_labels(n, spec.n_classes, &mut label_rng);
    let cond: Vec<Vec<usize>> =
        spec.factors.iter().map(|f| balanced_labels(n, f.cardinality, &mut label_rng)).collect();

    let means: Vec<Vec<f64>> = (0..spec.n_classes).map(|k| class_mean(spec, k)).collect();
    let mut source_rng = Rng::stream(spec.seed, SOURCE_STREAM);
    let mut x_t = Matrix::zeros(n, d);
    for i in 0..n {
        let row = x_t.row_mut(i);
        for (v, m) in row.iter_mut().zip(&means[y[i]]) {
            *v = m + spec.noise_sigma * source_rng.normal();
        }
    }

    let transforms = ConditionTransforms::generate(spec);
    let mut noise_rng = Rng::stream(spec.seed, TARGET_NOISE_STREAM);
    let mut x_s = Matrix::zeros(n, d);
    let mut labels = vec![0; spec.factors.len()];
    for i in 0..n {
        for (l, c) in labels.iter_mut().zip(&cond) {
            *l = c[i];
        }
        if transforms.is_identity(&labels) {
            x_s.row_mut(i).copy_from_slice(x_t.row(i));
            continue;
        }
        let mut row = transforms.apply(x_t.row(i), &labels);
        if spec.target_noise_sigma > 0.0 {
            for v in &mut row {
                *v += spec.target_noise_sigma * noise_rng.normal();
            }
        }
        x_s.row_mut(i).copy_from_slice(&row);
    }

    ParallelCorpus::new(spec.clone(), x_t, x_s, Some(y), cond.into_iter().map(Some).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FactorSpec;
    use crate::error::Error;

    pub(crate) fn spec() -> CorpusSpec {
        CorpusSpec {
            n_frames: 1000,
            input_dim: 6,
            n_classes: 4,
            factors: vec![
                FactorSpec { name: "environment".into(), cardinality: 3, transform_strength: 1.0 },
                FactorSpec { name: "speaker".into(), cardinality: 4, transform_strength: 0.5 },
            ],
            class_separation: 4.0,
            noise_sigma: 1.0,
            target_noise_sigma: 0.3,
            seed: 17,
            include_identity_condition: true,
        }
    }

    #[test]
    fn null_shift_copies_source() {
        let mut s = spec();
        for f in &mut s.factors {
            f.transform_strength = 0.0;
        }
        s.target_noise_sigma = 0.0;
        let c = generate(&s).unwrap();
        assert_eq!(c.source(), c.target());
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&spec()).unwrap(), generate(&spec()).unwrap());
        let mut other = spec();
        other.seed += 1;
        assert_ne!(generate(&spec()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn balanced_two_conditions() {
        let mut s = spec();
        s.factors = vec![FactorSpec { name: "env".into(), cardinality: 2, transform_strength: 1.0 }];
        let c = generate(&s).unwrap();
        let labels = c.condition_labels(0).unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 500);
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 500);
        let y = c.task_labels().unwrap();
        for k in 0..4 {
            assert_eq!(y.iter().filter(|&&l| l == k).count(), 250);
        }
    }

    #[test]
    fn identity_rows_are_exact_copies() {
        let c = generate(&spec()).unwrap();
        let (e, s) = (c.condition_labels(0).unwrap(), c.condition_labels(1).unwrap());
        let mut seen = 0;
        for i in 0..c.len() {
            if e[i] == 0 && s[i] == 0 {
                seen += 1;
                assert_eq!(c.source().row(i), c.target().row(i));
            } else {
                assert_ne!(c.source().row(i), c.target().row(i));
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn regenerated_transform_reproduces_target_without_noise() {
        let mut s = spec();
        s.target_noise_sigma = 0.0;
        let c = generate(&s).unwrap();
        let t = ConditionTransforms::generate(&s);
        for i in 0..c.len() {
            let labels = [c.condition_labels(0).unwrap()[i], c.condition_labels(1).unwrap()[i]];
            assert_eq!(t.apply(c.source().row(i), &labels), c.target().row(i));
        }
    }

    #[test]
    fn target_noise_is_the_only_residual() {
        let s = spec();
        let c = generate(&s).unwrap();
        let t = ConditionTransforms::generate(&s);
        let mut sum_sq = 0.0;
        let mut count = 0;
        for i in 0..c.len() {
            let labels = [c.condition_labels(0).unwrap()[i], c.condition_labels(1).unwrap()[i]];
            let clean = t.apply(c.source().row(i), &labels);
            for (a, b) in c.target().row(i).iter().zip(&clean) {
                sum_sq += (a - b) * (a - b);
                count += 1;
            }
        }
        let sigma = libm::sqrt(sum_sq / count as f64);
        // Identity rows contribute zeros: 1/12 of frames.
        assert!((sigma - 0.3 * libm::sqrt(11.0 / 12.0)).abs() < 0.02, "{sigma}");
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = spec();
        s.n_frames = 0;
        assert!(matches!(generate(&s), Err(Error::Spec(_))));
        let mut s = spec();
        s.class_separation = 0.0;
        assert!(generate(&s).is_err());
        let mut s = spec();
        s.factors[0].cardinality = 0;
        assert!(generate(&s).is_err());
        let mut s = spec();
        s.input_dim = 3;
        assert!(generate(&s).is_err());
        let mut s = spec();
        s.input_dim = 4;
        assert!(generate(&s).is_err());
        s.factors.iter_mut().for_each(|f| f.transform_strength = 0.0);
        assert!(generate(&s).is_ok());
    }

    #[test]
    fn class_coordinates_are_untouched() {
        let mut s = spec();
        s.target_noise_sigma = 0.0;
        let c = generate(&s).unwrap();
        let mut moved = 0;
        for i in 0..c.len() {
            let (t, x) = (c.source().row(i), c.target().row(i));
            assert_eq!(&t[..4], &x[..4]);
            if t[4..] != x[4..] {
                moved += 1;
            }
        }
        assert!(moved > c.len() / 2);
    }

    #[test]
    fn class_means_are_equidistant() {
        let s = spec();
        for a in 0..4 {
            for b in 0..a {
                let (ma, mb) = (class_mean(&s, a), class_mean(&s, b));
                let d: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
                assert!((libm::sqrt(d) - 4.0).abs() < 1e-12);
            }
        }
    }
}
