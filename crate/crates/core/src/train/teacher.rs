use alloc::format;
use alloc::vec::Vec;

use crate::corpus::FrameSource;
use crate::error::{Error, Result};
use crate::loss::{condition_loss, condition_loss_grad, LossBreakdown};
use crate::net::{DenseStack, Teacher};
use crate::tensor::{softmax_rows, Rng};
use crate::train::{epoch_order, EpochStats, Mode, TrainConfig, TrainState};

/// RNG stream for teacher weight initialization.
pub const TEACHER_INIT_STREAM: u64 = 0x5445_4143;

#[derive(Debug, Clone)]
pub struct TeacherRun {
    pub teacher: Teacher,
    pub history: Vec<EpochStats>,
}

/// Cross-entropy training of the teacher on labeled source frames.
pub fn train_teacher<D: FrameSource + ?Sized>(data: &D, n_classes: usize, config: &TrainConfig) -> Result<TeacherRun> {
    config.validate()?;
    if config.mode != Mode::Teacher {
        return Err(Error::config(format!("train_teacher needs mode teacher, got {}", config.mode)));
    }
    let x = data.source_frames();
    let labels = data
        .task_labels()
        .ok_or_else(|| Error::config("teacher training needs task labels on the source frames"))?;
    if labels.len() != x.rows() {
        return Err(Error::contract("task label count differs from frame count"));
    }
    if let Some((frame, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
        return Err(Error::Label { frame, label, classes: n_classes });
    }

    let mut dims = Vec::with_capacity(config.hidden_dims.len() + 2);
    dims.push(x.cols());
    dims.extend_from_slice(&config.hidden_dims);
    dims.push(n_classes);
    let mut init_rng = Rng::stream(config.seed, TEACHER_INIT_STREAM);
    let mut net = DenseStack::glorot(&dims, false, &mut init_rng);

    let mut state = TrainState::new(config.seed);
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let order = epoch_order(x.rows(), config.shuffle, &mut state.shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.gather_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (logits, cache) = net.forward_cached(&xb)?;
            let p = softmax_rows(&logits);
            total += condition_loss(&p, &yb)?;
            let g = condition_loss_grad(&p, &yb)?.scale(1.0 / batch.len() as f64);
            let (_, grads) = net.backward(&g, &cache)?;
            net.apply_sgd(&grads, config.lr)?;
            state.step += 1;
        }
        state.epoch += 1;
        let mean = total / x.rows().max(1) as f64;
        history.push(EpochStats {
            epoch: state.epoch,
            step: state.step,
            losses: LossBreakdown { l_ts: mean, l_cond: Vec::new(), l_total: mean, kl_diag: 0.0 },
        });
    }
    Ok(TeacherRun { teacher: Teacher::new(net)?, history })
}
