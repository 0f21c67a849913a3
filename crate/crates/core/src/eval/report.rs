use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::eval::{centroid_invariance, train_probe, ProbeConfig};
use crate::loss::{kl_divergence, ts_loss};
use crate::net::ModelGraph;

/// Which half of the parallel pairs a model is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorMetrics {
    pub factor: String,
    /// Largest condition prior in the split.
    pub chance: f64,
    /// Task accuracy restricted to each condition (`None` when absent from the split).
    pub task_accuracy: Vec<Option<f64>>,
    pub probe_accuracy: Option<f64>,
    /// Accuracy of the co-trained condition head, when the graph has one.
    pub head_accuracy: Option<f64>,
    pub invariance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub run: String,
    pub split: String,
    pub side: Side,
    pub epoch: usize,
    pub step: usize,
    pub frames: usize,
    /// Per-frame mean T/S loss of the student against teacher soft targets on
    /// the source half.
    pub mean_l_ts: f64,
    pub mean_kl: f64,
    pub accuracy: f64,
    pub factors: Vec<FactorMetrics>,
}

impl MetricsReport {
    pub fn factor(&self, name: &str) -> Option<&FactorMetrics> {
        self.factors.iter().find(|f| f.factor == name)
    }
}

fn accuracy(pred: &[usize], truth: &[usize], keep: impl Fn(usize) -> bool) -> Option<f64> {
    let mut n = 0usize;
    let mut hit = 0usize;
    for (i, (p, y)) in pred.iter().zip(truth).enumerate() {
        if keep(i) {
            n += 1;
            hit += (p == y) as usize;
        }
    }
    (n > 0).then(|| hit as f64 / n as f64)
}

/// Task and condition metrics of the student on one split. Probes are left
/// empty; see [`attach_probes`].
pub fn evaluate(model: &ModelGraph, split: &ParallelCorpus, split_name: &str, side: Side) -> Result<MetricsReport> {
    if split.is_empty() {
        return Err(Error::argument("cannot evaluate an empty split"));
    }
    let y = split
        .task_labels()
        .ok_or_else(|| Error::argument("evaluation needs task labels on the split"))?;
    let x = match side {
        Side::Source => split.source(),
        Side::Target => split.target(),
    };
    let fwd = model.forward_student(x)?;
    let p_t = model.forward_teacher(split.source())?;
    let n = split.len() as f64;
    let pred = fwd.task_post.argmax_rows();

    let mut factors = Vec::with_capacity(split.spec().factors.len());
    for (r, f) in split.spec().factors.iter().enumerate() {
        let Some(labels) = split.condition_labels(r) else { continue };
        let mut counts = vec![0usize; f.cardinality];
        for &l in labels {
            counts[l] += 1;
        }
        let present = counts.iter().filter(|&&c| c > 0).count();
        let head_accuracy = model
            .spec()
            .factors
            .iter()
            .position(|h| h.name == f.name)
            .and_then(|h| accuracy(&fwd.cond_post[h].argmax_rows(), labels, |_| true));
        factors.push(FactorMetrics {
            factor: f.name.clone(),
            chance: *counts.iter().max().unwrap() as f64 / n,
            task_accuracy: (0..f.cardinality).map(|a| accuracy(&pred, y, |i| labels[i] == a)).collect(),
            probe_accuracy: None,
            head_accuracy,
            invariance: if present >= 2 { Some(centroid_invariance(&fwd.features, labels)?) } else { None },
        });
    }

    Ok(MetricsReport {
        run: String::new(),
        split: split_name.to_string(),
        side,
        epoch: 0,
        step: 0,
        frames: split.len(),
        mean_l_ts: ts_loss(&p_t, &fwd.task_post)? / n,
        mean_kl: kl_divergence(&p_t, &fwd.task_post)? / n,
        accuracy: accuracy(&pred, y, |_| true).unwrap_or(0.0),
        factors,
    })
}

/// Trains one fresh probe per factor on the model's features for `split`
/// and records the held-out accuracy.
pub fn attach_probes(
    report: &mut MetricsReport,
    model: &ModelGraph,
    split: &ParallelCorpus,
    config: &ProbeConfig,
) -> Result<()> {
    let x = match report.side {
        Side::Source => split.source(),
        Side::Target => split.target(),
    };
    let features = model.student_features(x)?;
    for fm in &mut report.factors {
        let r = split.factor_index(&fm.factor)?;
        let labels = split.condition_labels(r).ok_or_else(|| Error::argument("split has no condition labels"))?;
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        fm.probe_accuracy = Some(train_probe(&features, labels, config)?.accuracy);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, CorpusSpec, FactorSpec};
    use crate::net::{clone_student_from_teacher, DenseLayer, DenseStack, FactorHead, NetSpec, Teacher};
    use crate::tensor::{Matrix, Rng};

    fn corpus() -> ParallelCorpus {
        generate(&CorpusSpec {
            n_frames: 400,
            input_dim: 6,
            n_classes: 4,
            factors: vec![FactorSpec { name: "environment".into(), cardinality: 3, transform_strength: 0.8 }],
            class_separation: 5.0,
            noise_sigma: 0.5,
            target_noise_sigma: 0.2,
            seed: 2,
            include_identity_condition: true,
        })
        .unwrap()
    }

    fn random_graph(spec: &NetSpec) -> ModelGraph {
        let t = Teacher::new(DenseStack::glorot(&spec.teacher_dims(), false, &mut Rng::new(4))).unwrap();
        clone_student_from_teacher(&t, spec, 1).unwrap()
    }

    /// A network whose output logits copy the four class coordinates scaled up, so
    /// argmax recovers the class on noise-free source frames.
    fn oracle_graph() -> ModelGraph {
        let spec = NetSpec::new(6, vec![4], 4);
        let eye = Matrix::identity(4);
        let mut pick = Matrix::zeros(6, 4);
        for i in 0..4 {
            pick.set(i, i, 1.0);
        }
        let l1 = DenseLayer { w: pick, b: Matrix::filled(1, 4, 100.0) };
        let l2 = DenseLayer { w: eye.scale(10.0), b: Matrix::zeros(1, 4) };
        let t = Teacher::new(DenseStack::new(vec![l1, l2], false).unwrap()).unwrap();
        clone_student_from_teacher(&t, &spec, 0).unwrap()
    }

    #[test]
    fn perfect_model_scores_one_everywhere() {
        let mut spec = corpus().spec().clone();
        spec.noise_sigma = 0.0;
        let c = generate(&spec).unwrap();
        let r = evaluate(&oracle_graph(), &c, "all", Side::Source).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r.factors[0].task_accuracy.iter().all(|a| *a == Some(1.0)));
    }

    #[test]
    fn uniform_posteriors_pick_class_zero() {
        let spec = NetSpec::new(6, vec![3], 4);
        let zero = |i, o| DenseLayer { w: Matrix::zeros(i, o), b: Matrix::zeros(1, o) };
        let t = Teacher::new(DenseStack::new(vec![zero(6, 3), zero(3, 4)], false).unwrap()).unwrap();
        let g = clone_student_from_teacher(&t, &spec, 0).unwrap();
        let c = corpus();
        let r = evaluate(&g, &c, "all", Side::Target).unwrap();
        let prior0 = c.task_labels().unwrap().iter().filter(|&&y| y == 0).count() as f64 / 400.0;
        assert_eq!(r.accuracy, prior0);
        assert_eq!(r.accuracy, 0.25);
    }

    #[test]
    fn clone_report_matches_teacher_report() {
        let c = corpus();
        let plain = NetSpec::new(6, vec![8, 8], 4);
        let with_head = plain.clone().with_factors(vec![FactorHead { name: "environment".into(), classes: 3 }]);
        let teacher_graph = random_graph(&plain);
        let student = clone_student_from_teacher(teacher_graph.teacher(), &with_head, 9).unwrap();
        let a = evaluate(&teacher_graph, &c, "test", Side::Source).unwrap();
        let mut b = evaluate(&student, &c, "test", Side::Source).unwrap();
        assert!(b.factors[0].head_accuracy.is_some());
        b.factors[0].head_accuracy = None;
        assert_eq!(a, b);
        assert_eq!(a.mean_kl, 0.0);
    }

    #[test]
    fn empty_split_rejected() {
        let c = corpus().subset(&[]);
        let g = random_graph(&NetSpec::new(6, vec![8], 4));
        assert!(matches!(evaluate(&g, &c, "x", Side::Target), Err(Error::Argument(_))));
    }

    #[test]
    fn evaluate_is_pure() {
        let c = corpus();
        let g = random_graph(&NetSpec::new(6, vec![8], 4));
        assert_eq!(evaluate(&g, &c, "t", Side::Target).unwrap(), evaluate(&g, &c, "t", Side::Target).unwrap());
    }
}
