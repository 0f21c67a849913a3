//! Synthetic frame-synchronized parallel corpora.
//!
//! Source frames come from per-class Gaussian clusters. Each target frame is
//! the matching source frame pushed through an affine distortion chosen by
//! its condition labels, plus fresh noise. Label 0 of every factor is the
//! identity condition when `include_identity_condition` is set, so rows that
//! are identity under every factor form clean-clean pairs.

mod codec;
mod generate;
mod spec;
mod split;
mod view;

pub use codec::{decode_corpus, decode_corpus_header, encode_corpus, CORPUS_MAGIC, CORPUS_VERSION};
pub use generate::{generate, ConditionTransforms};
pub use spec::{CorpusSpec, FactorSpec};
pub use split::split;
pub use view::{AuditedCorpus, FrameSource};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCorpus {
    spec: CorpusSpec,
    x_t: Matrix,
    x_s: Matrix,
    y: Option<Vec<usize>>,
    cond: Vec<Option<Vec<usize>>>,
}

impl ParallelCorpus {
    pub fn new(
        spec: CorpusSpec,
        x_t: Matrix,
        x_s: Matrix,
        y: Option<Vec<usize>>,
        cond: Vec<Option<Vec<usize>>>,
    ) -> Result<Self> {
        let n = x_t.rows();
        if x_s.rows() != n {
            return Err(Error::contract(format!("{} source rows but {} target rows", n, x_s.rows())));
        }
        if x_t.cols() != spec.input_dim || x_s.cols() != spec.input_dim {
            return Err(Error::spec("frame width differs from corpus input_dim"));
        }
        if cond.len() != spec.factors.len() {
            return Err(Error::spec("one condition label array per factor is required"));
        }
        if let Some(y) = &y {
            check_labels(y, n, spec.n_classes, "task")?;
        }
        for (f, labels) in spec.factors.iter().zip(&cond) {
            if let Some(l) = labels {
                check_labels(l, n, f.cardinality, &f.name)?;
            }
        }
        Ok(Self { spec, x_t, x_s, y, cond })
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.x_t.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source(&self) -> &Matrix {
        &self.x_t
    }

    pub fn target(&self) -> &Matrix {
        &self.x_s
    }

    pub fn task_labels(&self) -> Option<&[usize]> {
        self.y.as_deref()
    }

    pub fn condition_labels(&self, factor: usize) -> Option<&[usize]> {
        self.cond.get(factor).and_then(|c| c.as_deref())
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.spec.factor_index(name)
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let pick = |v: &Vec<usize>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            spec: self.spec.clone(),
            x_t: self.x_t.gather_rows(indices),
            x_s: self.x_s.gather_rows(indices),
            y: self.y.as_ref().map(pick),
            cond: self.cond.iter().map(|c| c.as_ref().map(pick)).collect(),
        }
    }

    pub fn without_task_labels(mut self) -> Self {
        self.y = None;
        self
    }

    pub fn without_condition_labels(mut self) -> Self {
        for c in &mut self.cond {
            *c = None;
        }
        self
    }
}

fn check_labels(labels: &[usize], n: usize, classes: usize, what: &str) -> Result<()> {
    if labels.len() != n {
        return Err(Error::spec(format!("{what} labels: {} entries for {n} frames", labels.len())));
    }
    if let Some((frame, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::Label { frame, label, classes });
    }
    Ok(())
}
