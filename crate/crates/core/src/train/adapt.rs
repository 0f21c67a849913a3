use alloc::format;
use alloc::vec::Vec;

use crate::corpus::FrameSource;
use crate::error::{Error, Result};
use crate::loss::{condition_loss, condition_loss_grad, kl_divergence, ts_loss, ts_loss_grad, LossBreakdown};
use crate::net::{clone_student_from_teacher, FactorHead, ModelGraph, NetSpec, Teacher};
use crate::tensor::Matrix;
use crate::train::{epoch_order, EpochStats, Mode, TrainConfig, TrainState};

/// Student adaptation in progress: plain T/S when the graph has no condition
/// heads, adversarial otherwise.
///
/// Task labels are never read.
#[derive(Debug)]
pub struct Adapter<'a, D: FrameSource + ?Sized> {
    graph: ModelGraph,
    data: &'a D,
    config: TrainConfig,
    state: TrainState,
    /// Teacher posteriors on every source frame, computed once.
    soft_targets: Matrix,
    /// Corpus factor index and labels for each condition head.
    head_labels: Vec<&'a [usize]>,
}

#[derive(Debug, Clone)]
pub struct AdaptRun {
    pub graph: ModelGraph,
    pub history: Vec<EpochStats>,
    pub state: TrainState,
}

/// Builds the student spec for `config` on top of the teacher's widths.
fn student_spec<D: FrameSource + ?Sized>(teacher: &Teacher, data: &D, config: &TrainConfig) -> Result<NetSpec> {
    let dims = teacher.dims();
    let hidden = dims[1..dims.len() - 1].to_vec();
    let mut spec = NetSpec::new(dims[0], hidden, dims[dims.len() - 1]);
    if let Some(s) = config.split_index {
        spec.split_index = s;
    }
    spec.condition_head_hidden = config.head_hidden.clone();
    let available = data.factors();
    for name in config.active_factors() {
        let Some((_, classes)) = available.iter().find(|(n, _)| n == name) else {
            return Err(Error::UnknownFactor {
                name: name.clone(),
                available: available.iter().map(|(n, _)| n.clone()).collect(),
            });
        };
        if *classes < 2 {
            return Err(Error::config(format!(
                "factor `{name}` has a single condition; an adversarial head on it is vacuous"
            )));
        }
        spec.factors.push(FactorHead { name: name.clone(), classes: *classes });
    }
    spec.validate()?;
    Ok(spec)
}

impl<'a, D: FrameSource + ?Sized> Adapter<'a, D> {
    /// Clones the student from `teacher` and prepares a fresh run.
    pub fn new(teacher: &Teacher, data: &'a D, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if config.mode == Mode::Teacher {
            return Err(Error::config("teacher mode is trained with train_teacher"));
        }
        let spec = student_spec(teacher, data, config)?;
        let mut graph = clone_student_from_teacher(teacher, &spec, config.seed)?;
        graph.grl.lambda = config.effective_lambda();
        Self::resume(graph, TrainState::new(config.seed), data, config)
    }

    /// Continues a run from a graph and state saved at an epoch boundary.
    pub fn resume(mut graph: ModelGraph, state: TrainState, data: &'a D, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let (x_t, x_s) = (data.source_frames(), data.target_frames());
        if x_t.rows() != x_s.rows() {
            return Err(Error::contract(format!(
                "corpus is not parallel: {} source frames, {} target frames",
                x_t.rows(),
                x_s.rows()
            )));
        }
        let active = config.active_factors();
        let heads = graph.spec().factors.clone();
        if heads.len() != active.len() || heads.iter().zip(active).any(|(h, a)| &h.name != a) {
            return Err(Error::config("graph condition heads do not match the selected factors"));
        }
        let available = data.factors();
        let mut head_labels = Vec::with_capacity(heads.len());
        for h in &heads {
            let idx = available.iter().position(|(n, _)| n == &h.name).ok_or_else(|| Error::UnknownFactor {
                name: h.name.clone(),
                available: available.iter().map(|(n, _)| n.clone()).collect(),
            })?;
            let labels = data.condition_labels(idx).ok_or_else(|| {
                Error::contract(format!("corpus carries no condition labels for factor `{}`", h.name))
            })?;
            if labels.len() != x_s.rows() || labels.iter().any(|&l| l >= h.classes) {
                return Err(Error::contract(format!("condition labels for `{}` do not fit the corpus", h.name)));
            }
            head_labels.push(labels);
        }
        graph.grl.lambda = config.effective_lambda();
        let soft_targets = graph.forward_teacher(x_t)?;
        Ok(Self { graph, data, config: config.clone(), state, soft_targets, head_labels })
    }

    pub fn graph(&self) -> &ModelGraph {
        &self.graph
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.epoch >= self.config.epochs
    }

    /// One pass over the corpus.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let n = self.soft_targets.rows();
        let order = epoch_order(n, self.config.shuffle, &mut self.state.shuffle_rng);
        let r = self.head_labels.len();
        let (mut l_ts, mut kl) = (0.0, 0.0);
        let mut l_cond = alloc::vec![0.0; r];
        for batch in order.chunks(self.config.batch_size) {
            let stats = self.step(batch)?;
            l_ts += stats.0;
            kl += stats.1;
            for (acc, v) in l_cond.iter_mut().zip(stats.2) {
                *acc += v;
            }
        }
        let per = 1.0 / n.max(1) as f64;
        let lambda = self.graph.grl.lambda;
        let weighted: Vec<f64> = l_cond.iter().enumerate().map(|(i, l)| l * self.config.weight(i) * per).collect();
        let mut losses = LossBreakdown::new(l_ts * per, weighted, lambda, kl * per)?;
        // Report unweighted per-factor means; the total uses the weights.
        losses.l_cond = l_cond.iter().map(|l| l * per).collect();
        self.state.epoch += 1;
        self.state.running = losses.clone();
        Ok(EpochStats { epoch: self.state.epoch, step: self.state.step, losses })
    }

    /// One simultaneous update on the frames in `batch`. Returns summed
    /// `(l_ts, kl, l_cond[r])` measured before the update.
    fn step(&mut self, batch: &[usize]) -> Result<(f64, f64, Vec<f64>)> {
        let b = batch.len() as f64;
        let x = self.data.target_frames().gather_rows(batch);
        let p_t = self.soft_targets.gather_rows(batch);
        let fwd = self.graph.forward_student(&x)?;
        let l_ts = ts_loss(&p_t, &fwd.task_post)?;
        let kl = kl_divergence(&p_t, &fwd.task_post)?;
        let grad_task = ts_loss_grad(&p_t, &fwd.task_post)?.scale(1.0 / b);
        let mut grad_cond = Vec::with_capacity(self.head_labels.len());
        let mut l_cond = Vec::with_capacity(self.head_labels.len());
        for (r, (labels, p_c)) in self.head_labels.iter().zip(&fwd.cond_post).enumerate() {
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            l_cond.push(condition_loss(p_c, &y)?);
            grad_cond.push(condition_loss_grad(p_c, &y)?.scale(self.config.weight(r) / b));
        }
        let grads = self.graph.backward_student(&fwd.cache, &grad_task, &grad_cond)?;
        self.graph.apply_sgd(&grads, self.config.lr)?;
        self.state.step += 1;
        Ok((l_ts, kl, l_cond))
    }

    /// Runs the remaining epochs.
    pub fn run(mut self) -> Result<AdaptRun> {
        let mut history = Vec::new();
        while !self.is_done() {
            history.push(self.run_epoch()?);
        }
        Ok(self.finish(history))
    }

    pub fn finish(self, history: Vec<EpochStats>) -> AdaptRun {
        AdaptRun { graph: self.graph, history, state: self.state }
    }
}

/// Adapts a student in whichever adaptation mode `config` names.
pub fn adapt<D: FrameSource + ?Sized>(teacher: &Teacher, data: &D, config: &TrainConfig) -> Result<AdaptRun> {
    Adapter::new(teacher, data, config)?.run()
}

fn require(config: &TrainConfig, mode: Mode) -> Result<()> {
    if config.mode != mode {
        return Err(Error::config(format!("expected mode {mode}, config says {}", config.mode)));
    }
    Ok(())
}

/// Plain T/S: `θ_S ← θ_S − μ ∂L_TS/∂θ_S`.
pub fn adapt_ts<D: FrameSource + ?Sized>(teacher: &Teacher, data: &D, config: &TrainConfig) -> Result<AdaptRun> {
    require(config, Mode::Ts)?;
    adapt(teacher, data, config)
}

/// Adversarial T/S with one condition head.
pub fn adapt_ats<D: FrameSource + ?Sized>(teacher: &Teacher, data: &D, config: &TrainConfig) -> Result<AdaptRun> {
    require(config, Mode::Ats)?;
    adapt(teacher, data, config)
}

/// Multi-factorial adversarial T/S: one head per selected factor, equally
/// weighted unless `factor_weights` says otherwise.
pub fn adapt_mfa<D: FrameSource + ?Sized>(teacher: &Teacher, data: &D, config: &TrainConfig) -> Result<AdaptRun> {
    require(config, Mode::Mfa)?;
    adapt(teacher, data, config)
}
