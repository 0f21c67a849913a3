//! Distillation, condition and combined objectives.
//!
//! Batch losses are sums over frames. Gradients with respect to logits are
//! returned unscaled; the trainer divides by the batch size.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::matrix::dim;
use crate::tensor::Matrix;

/// Lower clamp applied to probabilities before taking a log.
pub const PROB_FLOOR: f64 = 1e-300;

#[inline]
fn safe_ln(p: f64) -> f64 {
    libm::log(p.max(PROB_FLOOR))
}

fn same_shape(op: &'static str, p_t: &Matrix, p_s: &Matrix) -> Result<()> {
    if p_t.shape() != p_s.shape() {
        return Err(dim(op, "p_T", p_t, "p_S", p_s));
    }
    Ok(())
}

/// Soft-target cross-entropy `−Σ_i Σ_q p_T log p_S`.
pub fn ts_loss(p_t: &Matrix, p_s: &Matrix) -> Result<f64> {
    same_shape("ts_loss", p_t, p_s)?;
    Ok(-p_t.as_slice().iter().zip(p_s.as_slice()).map(|(&t, &s)| t * safe_ln(s)).sum::<f64>())
}

/// `Σ_i Σ_q p_T log(p_T / p_S)` with `0·log(0/x) = 0`.
pub fn kl_divergence(p_t: &Matrix, p_s: &Matrix) -> Result<f64> {
    same_shape("kl_divergence", p_t, p_s)?;
    Ok(p_t
        .as_slice()
        .iter()
        .zip(p_s.as_slice())
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &s)| t * (libm::log(t) - safe_ln(s)))
        .sum())
}

/// Summed row entropy `−Σ_i Σ_q p log p`.
pub fn entropy(p: &Matrix) -> f64 {
    -p.as_slice().iter().filter(|&&v| v > 0.0).map(|&v| v * libm::log(v)).sum::<f64>()
}

fn check_labels(p_c: &Matrix, labels: &[usize]) -> Result<()> {
    if labels.len() != p_c.rows() {
        return Err(Error::argument(format!("{} labels for {} frames", labels.len(), p_c.rows())));
    }
    if let Some((frame, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= p_c.cols()) {
        return Err(Error::Label { frame, label, classes: p_c.cols() });
    }
    Ok(())
}

/// Hard-label cross-entropy `−Σ_i log p_c[i, c_i]`.
pub fn condition_loss(p_c: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(p_c, labels)?;
    Ok(-labels.iter().enumerate().map(|(i, &c)| safe_ln(p_c.get(i, c))).sum::<f64>())
}

/// `l_ts − λ Σ_r l_cond[r]`.
pub fn total_loss(l_ts: f64, l_cond: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::argument(format!("lambda must be nonnegative, got {lambda}")));
    }
    Ok(l_ts - lambda * l_cond.iter().sum::<f64>())
}

/// `l_ts − λ Σ_r w_r l_cond[r]`; equals [`total_loss`] with unit weights.
pub fn weighted_total_loss(l_ts: f64, l_cond: &[f64], weights: &[f64], lambda: f64) -> Result<f64> {
    if weights.len() != l_cond.len() {
        return Err(Error::argument("one weight per condition loss is required"));
    }
    let weighted: Vec<f64> = l_cond.iter().zip(weights).map(|(l, w)| l * w).collect();
    total_loss(l_ts, &weighted, lambda)
}

/// Gradient of [`ts_loss`] with respect to the student's task logits:
/// `p_S − p_T` per row.
pub fn ts_loss_grad(p_t: &Matrix, p_s: &Matrix) -> Result<Matrix> {
    same_shape("ts_loss_grad", p_t, p_s)?;
    p_s.sub(p_t)
}

/// Gradient of [`condition_loss`] with respect to the head's logits.
pub fn condition_loss_grad(p_c: &Matrix, labels: &[usize]) -> Result<Matrix> {
    check_labels(p_c, labels)?;
    let mut g = p_c.clone();
    for (i, &c) in labels.iter().enumerate() {
        let v = g.get(i, c);
        g.set(i, c, v - 1.0);
    }
    Ok(g)
}

/// Losses of one batch or one evaluation pass.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub l_ts: f64,
    pub l_cond: Vec<f64>,
    pub l_total: f64,
    pub kl_diag: f64,
}

impl LossBreakdown {
    pub fn new(l_ts: f64, l_cond: Vec<f64>, lambda: f64, kl_diag: f64) -> Result<Self> {
        let l_total = total_loss(l_ts, &l_cond, lambda)?;
        Ok(Self { l_ts, l_cond, l_total, kl_diag })
    }
}
