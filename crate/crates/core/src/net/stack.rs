use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{
    affine, affine_backward, affine_forward, relu, relu_backward, relu_forward, AffineCache,
    Matrix, ReluCache, Rng,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Matrix,
    pub b: Matrix,
}

impl DenseLayer {
    /// Glorot-uniform weights in `[-s, s]`, `s = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let s = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let data = (0..fan_in * fan_out).map(|_| rng.uniform(-s, s)).collect();
        Self { w: Matrix::new(fan_in, fan_out, data).expect("sized"), b: Matrix::zeros(1, fan_out) }
    }

    pub fn in_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub w: Matrix,
    pub b: Matrix,
}

/// A chain of affine layers with a rectifier after every layer except,
/// optionally, the last.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStack {
    layers: Vec<DenseLayer>,
    relu_last: bool,
}

#[derive(Debug, Clone)]
pub struct StackCache {
    steps: Vec<(AffineCache, Option<ReluCache>)>,
}

impl DenseStack {
    pub fn new(layers: Vec<DenseLayer>, relu_last: bool) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::spec(alloc::format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        for l in &layers {
            if l.b.shape() != (1, l.out_dim()) {
                return Err(Error::spec("bias shape does not match layer width"));
            }
        }
        Ok(Self { layers, relu_last })
    }

    /// Fresh stack over the widths `dims[0] -> dims[1] -> ... -> dims[n]`.
    pub fn glorot(dims: &[usize], relu_last: bool, rng: &mut Rng) -> Self {
        let layers = dims.windows(2).map(|d| DenseLayer::glorot(d[0], d[1], rng)).collect();
        Self { layers, relu_last }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn relu_last(&self) -> bool {
        self.relu_last
    }

    /// Widths `[in, h1, ..., out]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.layers.len() + 1);
        if let Some(first) = self.layers.first() {
            d.push(first.in_dim());
        }
        d.extend(self.layers.iter().map(DenseLayer::out_dim));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.as_slice().len() + l.b.as_slice().len()).sum()
    }

    fn has_relu(&self, i: usize) -> bool {
        i + 1 < self.layers.len() || self.relu_last
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            h = affine(&h, &l.w, &l.b)?;
            if self.has_relu(i) {
                h = relu(&h);
            }
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, StackCache)> {
        let mut h = x.clone();
        let mut steps = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let (z, ac) = affine_forward(&h, &l.w, &l.b)?;
            if self.has_relu(i) {
                let (a, rc) = relu_forward(&z);
                h = a;
                steps.push((ac, Some(rc)));
            } else {
                h = z;
                steps.push((ac, None));
            }
        }
        Ok((h, StackCache { steps }))
    }

    /// Returns the gradient at the stack input and per-layer parameter
    /// gradients, in layer order.
    pub fn backward(&self, grad_out: &Matrix, cache: &StackCache) -> Result<(Matrix, Vec<DenseGrad>)> {
        if cache.steps.len() != self.layers.len() {
            return Err(Error::contract("stack cache was produced by a different network"));
        }
        let mut g = grad_out.clone();
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, (ac, rc)) in self.layers.iter().zip(&cache.steps).rev() {
            if let Some(rc) = rc {
                g = relu_backward(&g, rc)?;
            }
            let ag = affine_backward(&g, ac, &l.w)?;
            grads.push(DenseGrad { w: ag.w, b: ag.b });
            g = ag.x;
        }
        grads.reverse();
        Ok((g, grads))
    }

    /// `θ ← θ − lr·g` for every layer.
    pub fn apply_sgd(&mut self, grads: &[DenseGrad], lr: f64) -> Result<()> {
        if grads.len() != self.layers.len() {
            return Err(Error::contract("gradient list does not match layer count"));
        }
        for (l, g) in self.layers.iter_mut().zip(grads) {
            crate::train::sgd_step(l.w.as_mut_slice(), g.w.as_slice(), lr)?;
            crate::train::sgd_step(l.b.as_mut_slice(), g.b.as_slice(), lr)?;
        }
        Ok(())
    }
}
