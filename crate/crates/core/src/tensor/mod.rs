//! Dense 64-bit linear algebra, a seeded generator, and the hand-written
//! differentiable primitives every network in the crate is built from.

pub(crate) mod matrix;
mod ops;
mod rng;

pub use matrix::Matrix;
pub use ops::{
    affine, affine_backward, affine_forward, relu, relu_backward, relu_forward, softmax_rows,
    AffineCache, AffineGrads, ReluCache,
};
pub use rng::{rng_uniform, Rng, RngPosition};
