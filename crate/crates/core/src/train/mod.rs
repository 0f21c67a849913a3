//! Teacher pretraining and the three adaptation modes on one SGD engine.
//!
//! Every adaptation step is a single forward pass, one composite backward
//! pass through the gradient reversal layer, and one simultaneous update of
//! `θ_f`, `θ_y` and all `θ_c^r`. Gradients are per-frame means over the batch.

mod adapt;
mod config;
mod state;
mod teacher;

pub use adapt::{adapt, adapt_ats, adapt_mfa, adapt_ts, Adapter, AdaptRun};
pub use config::{Mode, TrainConfig, DEFAULT_LAMBDA};
pub use state::{EpochStats, TrainState};
pub use teacher::{train_teacher, TeacherRun, TEACHER_INIT_STREAM};

use crate::error::{Error, Result};

/// RNG stream for the per-epoch frame order.
pub const SHUFFLE_STREAM: u64 = 0x5348_5546;

/// `θ ← θ − μ·g`, elementwise.
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::contract(alloc::format!(
            "{} parameters but {} gradient entries",
            params.len(),
            grads.len()
        )));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

/// Frame order for one epoch.
pub(crate) fn epoch_order(n: usize, shuffle: bool, rng: &mut crate::Rng) -> alloc::vec::Vec<usize> {
    let mut order: alloc::vec::Vec<usize> = (0..n).collect();
    if shuffle {
        rng.shuffle(&mut order);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_step_examples() {
        let mut p = [1.0, -2.0];
        sgd_step(&mut p, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(p, [1.0, -2.0]);
        sgd_step(&mut p, &[3.0, 4.0], 0.0).unwrap();
        assert_eq!(p, [1.0, -2.0]);
        assert!(sgd_step(&mut p, &[1.0], 0.1).is_err());
    }

    #[test]
    fn reversed_feature_update_ascends_condition_term() {
        // θ_f ← θ_f − μ (∂L_TS/∂θ_f − λ ∂L_cond/∂θ_f)
        let (d_ts, d_cond, lambda, lr) = (0.2, 0.05, 5.0, 0.1);
        let mut theta = [1.0];
        sgd_step(&mut theta, &[d_ts - lambda * d_cond], lr).unwrap();
        assert!((theta[0] - 1.005).abs() < 1e-15);
    }
}
