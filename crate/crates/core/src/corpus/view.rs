use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::corpus::ParallelCorpus;
use crate::tensor::Matrix;

/// Read access to parallel frames and their labels, as seen by the trainer.
pub trait FrameSource {
    fn source_frames(&self) -> &Matrix;
    fn target_frames(&self) -> &Matrix;
    /// `(name, cardinality)` for every factor the frames are labeled with.
    fn factors(&self) -> Vec<(String, usize)>;
    fn condition_labels(&self, factor: usize) -> Option<&[usize]>;
    fn task_labels(&self) -> Option<&[usize]>;
}

impl FrameSource for ParallelCorpus {
    fn source_frames(&self) -> &Matrix {
        self.source()
    }

    fn target_frames(&self) -> &Matrix {
        self.target()
    }

    fn factors(&self) -> Vec<(String, usize)> {
        self.spec().factors.iter().map(|f| (f.name.clone(), f.cardinality)).collect()
    }

    fn condition_labels(&self, factor: usize) -> Option<&[usize]> {
        ParallelCorpus::condition_labels(self, factor)
    }

    fn task_labels(&self) -> Option<&[usize]> {
        ParallelCorpus::task_labels(self)
    }
}

/// Wraps a corpus and counts label reads.
#[derive(Debug)]
pub struct AuditedCorpus<'a> {
    inner: &'a ParallelCorpus,
    task_reads: Cell<usize>,
    condition_reads: Cell<usize>,
}

impl<'a> AuditedCorpus<'a> {
    pub fn new(inner: &'a ParallelCorpus) -> Self {
        Self { inner, task_reads: Cell::new(0), condition_reads: Cell::new(0) }
    }

    pub fn task_label_reads(&self) -> usize {
        self.task_reads.get()
    }

    pub fn condition_label_reads(&self) -> usize {
        self.condition_reads.get()
    }
}

impl FrameSource for AuditedCorpus<'_> {
    fn source_frames(&self) -> &Matrix {
        self.inner.source()
    }

    fn target_frames(&self) -> &Matrix {
        self.inner.target()
    }

    fn factors(&self) -> Vec<(String, usize)> {
        self.inner.factors()
    }

    fn condition_labels(&self, factor: usize) -> Option<&[usize]> {
        self.condition_reads.set(self.condition_reads.get() + 1);
        self.inner.condition_labels(factor)
    }

    fn task_labels(&self) -> Option<&[usize]> {
        self.task_reads.set(self.task_reads.get() + 1);
        self.inner.task_labels()
    }
}
