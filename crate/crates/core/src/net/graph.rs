use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::net::{DenseGrad, DenseStack, Grl, NetSpec, StackCache};
use crate::tensor::{softmax_rows, Matrix, Rng};

/// RNG stream base for condition-head initialization; head `r` draws from
/// stream `HEAD_INIT_STREAM + r` of the run seed.
pub const HEAD_INIT_STREAM: u64 = 0x4845_4144_0000;

/// Frozen source-domain network. There is no mutable access to its layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Teacher {
    net: DenseStack,
}

impl Teacher {
    pub fn new(net: DenseStack) -> Result<Self> {
        if net.relu_last() || net.layers().len() < 2 {
            return Err(Error::spec("teacher needs at least one hidden layer and a linear output layer"));
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &DenseStack {
        &self.net
    }

    pub fn dims(&self) -> Vec<usize> {
        self.net.dims()
    }

    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        self.net.forward(x)
    }

    /// Soft targets `p_T(q | x)`. Nothing is cached.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.logits(x)?))
    }
}

/// Student (feature extractor, task head, condition heads) plus the frozen teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    spec: NetSpec,
    pub(crate) feature: DenseStack,
    pub(crate) task: DenseStack,
    pub(crate) heads: Vec<DenseStack>,
    pub grl: Grl,
    teacher: Teacher,
}

#[derive(Debug, Clone)]
pub struct StudentCache {
    feature: StackCache,
    task: StackCache,
    heads: Vec<StackCache>,
    batch: usize,
}

#[derive(Debug, Clone)]
pub struct StudentForward {
    pub features: Matrix,
    pub task_post: Matrix,
    pub cond_post: Vec<Matrix>,
    pub cache: StudentCache,
}

/// Parameter gradients for every student group.
///
/// `feature` is `∂L_TS/∂θ_f − λ Σ_r ∂L_cond^r/∂θ_f`, `task` is `∂L_TS/∂θ_y`,
/// and `heads[r]` is `∂L_cond^r/∂θ_c^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub feature: Vec<DenseGrad>,
    pub task: Vec<DenseGrad>,
    pub heads: Vec<Vec<DenseGrad>>,
}

/// Copies the teacher into `θ_f`/`θ_y` and initializes one condition head
/// per factor in `spec` from `seed`.
pub fn clone_student_from_teacher(teacher: &Teacher, spec: &NetSpec, seed: u64) -> Result<ModelGraph> {
    spec.validate()?;
    if teacher.dims() != spec.teacher_dims() {
        return Err(Error::spec(format!(
            "teacher widths {:?} do not match spec {:?}",
            teacher.dims(),
            spec.teacher_dims()
        )));
    }
    let layers = teacher.net().layers();
    let feature = DenseStack::new(layers[..spec.split_index].to_vec(), true)?;
    let task = DenseStack::new(layers[spec.split_index..].to_vec(), false)?;
    let heads = (0..spec.factors.len())
        .map(|r| {
            let mut rng = Rng::stream(seed, HEAD_INIT_STREAM + r as u64);
            DenseStack::glorot(&spec.head_dims(r), false, &mut rng)
        })
        .collect();
    Ok(ModelGraph {
        spec: spec.clone(),
        feature,
        task,
        heads,
        grl: Grl::new(crate::train::DEFAULT_LAMBDA),
        teacher: teacher.clone(),
    })
}

impl ModelGraph {
    /// Reassembles a graph from decoded parts, checking every shape against `spec`.
    pub fn from_parts(
        spec: NetSpec,
        feature: DenseStack,
        task: DenseStack,
        heads: Vec<DenseStack>,
        teacher: Teacher,
    ) -> Result<Self> {
        spec.validate()?;
        let td = spec.teacher_dims();
        if teacher.dims() != td
            || feature.dims() != td[..=spec.split_index]
            || task.dims() != td[spec.split_index..]
            || heads.len() != spec.factors.len()
            || heads.iter().enumerate().any(|(r, h)| h.dims() != spec.head_dims(r))
        {
            return Err(Error::spec("parameter blocks do not match the network spec"));
        }
        Ok(Self { spec, feature, task, heads, grl: Grl::new(crate::train::DEFAULT_LAMBDA), teacher })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn teacher(&self) -> &Teacher {
        &self.teacher
    }

    pub fn feature_extractor(&self) -> &DenseStack {
        &self.feature
    }

    pub fn task_head(&self) -> &DenseStack {
        &self.task
    }

    pub fn condition_heads(&self) -> &[DenseStack] {
        &self.heads
    }

    /// The adapted student as a standalone network (`M_y ∘ M_f`).
    pub fn student_as_teacher(&self) -> Teacher {
        let mut layers = self.feature.layers().to_vec();
        layers.extend_from_slice(self.task.layers());
        Teacher { net: DenseStack::new(layers, false).expect("student layers chain") }
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.spec.input_dim {
            return Err(Error::spec(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.spec.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward_teacher(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        self.teacher.forward(x)
    }

    pub fn student_features(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        self.feature.forward(x)
    }

    /// Task posteriors `p_S` without caches.
    pub fn predict_student(&self, x: &Matrix) -> Result<Matrix> {
        let f = self.student_features(x)?;
        Ok(softmax_rows(&self.task.forward(&f)?))
    }

    pub fn forward_student(&self, x: &Matrix) -> Result<StudentForward> {
        self.check_input(x)?;
        let (features, feature_cache) = self.feature.forward_cached(x)?;
        let (task_logits, task_cache) = self.task.forward_cached(&features)?;
        let reversed_in = self.grl.forward(&features);
        let mut cond_post = Vec::with_capacity(self.heads.len());
        let mut head_caches = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let (logits, c) = head.forward_cached(&reversed_in)?;
            cond_post.push(softmax_rows(&logits));
            head_caches.push(c);
        }
        Ok(StudentForward {
            features,
            task_post: softmax_rows(&task_logits),
            cond_post,
            cache: StudentCache { feature: feature_cache, task: task_cache, heads: head_caches, batch: x.rows() },
        })
    }

    /// Composite backward pass from gradients at the task logits and at each
    /// condition head's logits. The `−λ` factor is applied once, by the GRL.
    pub fn backward_student(&self, cache: &StudentCache, grad_task: &Matrix, grad_cond: &[Matrix]) -> Result<Gradients> {
        if grad_cond.len() != self.heads.len() || cache.heads.len() != self.heads.len() {
            return Err(Error::contract(format!(
                "{} condition gradients / {} cached heads for {} heads",
                grad_cond.len(),
                cache.heads.len(),
                self.heads.len()
            )));
        }
        if grad_task.rows() != cache.batch || grad_cond.iter().any(|g| g.rows() != cache.batch) {
            return Err(Error::contract("upstream gradient batch size differs from the cached forward pass"));
        }
        let (mut grad_features, task) = self.task.backward(grad_task, &cache.task)?;
        let mut heads = Vec::with_capacity(self.heads.len());
        for ((head, c), g) in self.heads.iter().zip(&cache.heads).zip(grad_cond) {
            let (grad_in, hg) = head.backward(g, c)?;
            grad_features.add_assign(&self.grl.backward(&grad_in))?;
            heads.push(hg);
        }
        let (_, feature) = self.feature.backward(&grad_features, &cache.feature)?;
        Ok(Gradients { feature, task, heads })
    }

    /// One simultaneous SGD update of `θ_f`, `θ_y` and every `θ_c^r`.
    /// The teacher is never touched.
    pub fn apply_sgd(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.heads.len() != self.heads.len() {
            return Err(Error::contract("gradient head count does not match the graph"));
        }
        self.feature.apply_sgd(&grads.feature, lr)?;
        self.task.apply_sgd(&grads.task, lr)?;
        for (h, g) in self.heads.iter_mut().zip(&grads.heads) {
            h.apply_sgd(g, lr)?;
        }
        Ok(())
    }

    pub(crate) fn param_blocks(&self) -> impl Iterator<Item = &Matrix> + '_ {
        self.feature
            .layers()
            .iter()
            .chain(self.task.layers())
            .chain(self.heads.iter().flat_map(|h| h.layers()))
            .chain(self.teacher.net.layers())
            .flat_map(|l| [&l.w, &l.b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::FactorHead;
    use crate::tensor::rng_uniform;
    use alloc::vec;

    fn teacher(spec: &NetSpec, seed: u64) -> Teacher {
        let mut rng = Rng::new(seed);
        Teacher::new(DenseStack::glorot(&spec.teacher_dims(), false, &mut rng)).unwrap()
    }

    fn spec() -> NetSpec {
        NetSpec::new(4, vec![8, 8], 3).with_factors(vec![FactorHead { name: "env".into(), classes: 2 }])
    }

    #[test]
    fn clone_matches_teacher_exactly() {
        for split in [1, 2] {
            let mut s = spec();
            s.split_index = split;
            let t = teacher(&s, 1);
            let g = clone_student_from_teacher(&t, &s, 2).unwrap();
            let x = rng_uniform(&mut Rng::new(3), -2.0, 2.0, 100, 4).unwrap();
            let ps = g.forward_student(&x).unwrap().task_post;
            assert_eq!(ps.max_abs_diff(&g.forward_teacher(&x).unwrap()), Some(0.0));
            assert_eq!(g.predict_student(&x).unwrap(), ps);
        }
    }

    #[test]
    fn heads_depend_on_seed_only() {
        let s = spec();
        let t = teacher(&s, 1);
        let a = clone_student_from_teacher(&t, &s, 10).unwrap();
        let b = clone_student_from_teacher(&t, &s, 11).unwrap();
        let c = clone_student_from_teacher(&t, &s, 10).unwrap();
        assert_ne!(a.heads, b.heads);
        assert_eq!(a, c);
    }

    #[test]
    fn no_factor_graph() {
        let s = NetSpec::new(4, vec![8], 3);
        let g = clone_student_from_teacher(&teacher(&s, 1), &s, 0).unwrap();
        assert!(g.condition_heads().is_empty());
        let out = g.forward_student(&Matrix::zeros(2, 4)).unwrap();
        assert!(out.cond_post.is_empty());
    }

    #[test]
    fn mismatched_teacher_rejected() {
        let s = spec();
        let other = NetSpec::new(4, vec![8, 7], 3);
        assert!(matches!(clone_student_from_teacher(&teacher(&other, 1), &s, 0), Err(Error::Spec(_))));
    }

    #[test]
    fn empty_batch_and_dimension_errors() {
        let s = spec();
        let g = clone_student_from_teacher(&teacher(&s, 1), &s, 0).unwrap();
        let out = g.forward_student(&Matrix::zeros(0, 4)).unwrap();
        assert_eq!(out.task_post.shape(), (0, 3));
        assert_eq!(out.cond_post[0].shape(), (0, 2));
        assert!(matches!(g.forward_student(&Matrix::zeros(1, 5)), Err(Error::Spec(_))));
        assert!(matches!(g.forward_teacher(&Matrix::zeros(1, 3)), Err(Error::Spec(_))));
    }

    #[test]
    fn posteriors_are_normalized_and_teacher_stateless() {
        let s = spec();
        let g = clone_student_from_teacher(&teacher(&s, 5), &s, 0).unwrap();
        let x = rng_uniform(&mut Rng::new(8), -5.0, 5.0, 20, 4).unwrap();
        let out = g.forward_student(&x).unwrap();
        for m in core::iter::once(&out.task_post).chain(&out.cond_post) {
            for r in m.iter_rows() {
                assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
        assert_eq!(g.forward_teacher(&x).unwrap(), g.forward_teacher(&x).unwrap());
    }

    #[test]
    fn backward_cache_mismatch_is_contract_error() {
        let s = spec();
        let g = clone_student_from_teacher(&teacher(&s, 1), &s, 0).unwrap();
        let fwd = g.forward_student(&Matrix::zeros(3, 4)).unwrap();
        let err = g.backward_student(&fwd.cache, &Matrix::zeros(2, 3), &[Matrix::zeros(2, 2)]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = g.backward_student(&fwd.cache, &Matrix::zeros(3, 3), &[]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn lambda_zero_or_zero_condition_grad_gives_pure_ts_feature_gradient() {
        let s = spec();
        let t = teacher(&s, 1);
        let mut g = clone_student_from_teacher(&t, &s, 3).unwrap();
        let x = rng_uniform(&mut Rng::new(4), -1.0, 1.0, 5, 4).unwrap();
        let gt = rng_uniform(&mut Rng::new(5), -1.0, 1.0, 5, 3).unwrap();
        let gc = rng_uniform(&mut Rng::new(6), -1.0, 1.0, 5, 2).unwrap();

        let plain_spec = NetSpec::new(4, vec![8, 8], 3);
        let plain = clone_student_from_teacher(&t, &plain_spec, 3).unwrap();
        let pf = plain.forward_student(&x).unwrap();
        let pure = plain.backward_student(&pf.cache, &gt, &[]).unwrap();

        let fwd = g.forward_student(&x).unwrap();
        let zero_cond = g.backward_student(&fwd.cache, &gt, &[Matrix::zeros(5, 2)]).unwrap();
        assert_eq!(zero_cond.feature, pure.feature);
        assert_eq!(zero_cond.task, pure.task);

        g.grl.lambda = 0.0;
        let no_lambda = g.backward_student(&fwd.cache, &gt, core::slice::from_ref(&gc)).unwrap();
        assert_eq!(no_lambda.feature, pure.feature);

        // Head gradients carry no λ.
        g.grl.lambda = 5.0;
        let with_lambda = g.backward_student(&fwd.cache, &gt, &[gc]).unwrap();
        assert_eq!(with_lambda.heads, no_lambda.heads);
        assert_ne!(with_lambda.feature, pure.feature);
    }
}
