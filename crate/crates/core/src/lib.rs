//! Teacher-student distillation with adversarial condition suppression.
//!
//! A frozen teacher network produces soft targets on source-domain frames; a
//! student cloned from it is adapted on frame-synchronized target-domain
//! frames. The student is factored into a feature extractor and a task head,
//! and one condition classifier per nuisance factor sits behind a gradient
//! reversal layer, so a single SGD sweep minimizes the distillation loss while
//! pushing the features toward condition invariance.
//!
//! The crate is `no_std` and needs only `alloc`. File IO, configuration and
//! the command line live in the `ats` companion crate.

#![no_std]
#![deny(rust_2018_idioms)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod codec;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod loss;
pub mod net;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{Matrix, Rng};
