use alloc::format;

use crate::error::{Error, Result};
use crate::tensor::matrix::dim;
use crate::tensor::Matrix;

/// Input retained by [`affine_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct AffineCache {
    input: Matrix,
    out_dim: usize,
}

impl AffineCache {
    pub fn input(&self) -> &Matrix {
        &self.input
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrads {
    pub x: Matrix,
    pub w: Matrix,
    pub b: Matrix,
}

fn check_affine(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<()> {
    if x.cols() != w.rows() {
        return Err(dim("affine_forward", "x", x, "W", w));
    }
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(dim("affine_forward", "W", w, "b", b));
    }
    Ok(())
}

/// `x·W + b` with `b` broadcast over rows.
pub fn affine(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_affine(x, w, b)?;
    let mut out = x.matmul(w)?;
    let bias = b.as_slice();
    for r in 0..out.rows() {
        for (o, bj) in out.row_mut(r).iter_mut().zip(bias) {
            *o += bj;
        }
    }
    Ok(out)
}

pub fn affine_forward(x: &Matrix, w: &Matrix, b: &Matrix) -> Result<(Matrix, AffineCache)> {
    let out = affine(x, w, b)?;
    Ok((out, AffineCache { input: x.clone(), out_dim: w.cols() }))
}

/// Gradients of the affine map given the upstream gradient. `w` must be the
/// weight matrix used in the matching forward call.
pub fn affine_backward(grad_out: &Matrix, cache: &AffineCache, w: &Matrix) -> Result<AffineGrads> {
    let x = &cache.input;
    if grad_out.rows() != x.rows() || grad_out.cols() != cache.out_dim {
        return Err(Error::contract(format!(
            "affine cache holds a {}x{} input with {} outputs, upstream gradient is {:?}",
            x.rows(),
            x.cols(),
            cache.out_dim,
            grad_out.shape()
        )));
    }
    if w.shape() != (x.cols(), cache.out_dim) {
        return Err(Error::contract(format!(
            "weights {:?} do not match the cached affine map {}x{}",
            w.shape(),
            x.cols(),
            cache.out_dim
        )));
    }
    Ok(AffineGrads { x: grad_out.matmul_t(w)?, w: x.t_matmul(grad_out)?, b: grad_out.col_sums() })
}

/// Pre-activation retained by [`relu_forward`].
#[derive(Debug, Clone)]
pub struct ReluCache {
    pre: Matrix,
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

pub fn relu_forward(x: &Matrix) -> (Matrix, ReluCache) {
    (relu(x), ReluCache { pre: x.clone() })
}

/// Passes gradient where the pre-activation was strictly positive; the
/// subgradient at 0 is 0.
pub fn relu_backward(grad_out: &Matrix, cache: &ReluCache) -> Result<Matrix> {
    if grad_out.shape() != cache.pre.shape() {
        return Err(Error::contract(format!(
            "relu cache is {:?}, upstream gradient is {:?}",
            cache.pre.shape(),
            grad_out.shape()
        )));
    }
    let mut g = grad_out.clone();
    for (gi, &p) in g.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
        if p <= 0.0 {
            *gi = 0.0;
        }
    }
    Ok(g)
}

/// Row-wise softmax through the log-sum-exp shift.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}
