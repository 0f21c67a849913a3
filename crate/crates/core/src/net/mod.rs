//! Teacher network, factored student, gradient reversal, and checkpoints.
//!
//! The student is `M_y ∘ M_f` for the task path and `M_c^r ∘ GRL ∘ M_f` for
//! each condition factor `r`. `M_f` is the first `split_index` hidden layers
//! of the teacher; `M_y` is the remaining hidden layers plus the output layer.

mod checkpoint;
mod graph;
mod grl;
mod spec;
mod stack;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use graph::{
    clone_student_from_teacher, Gradients, ModelGraph, StudentCache, StudentForward, Teacher,
    HEAD_INIT_STREAM,
};
pub use grl::Grl;
pub use spec::{FactorHead, NetSpec, DEFAULT_HEAD_HIDDEN};
pub use stack::{DenseGrad, DenseLayer, DenseStack, StackCache};
