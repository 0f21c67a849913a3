//! Accuracy, distillation diagnostics, condition probes and invariance
//! statistics for trained graphs.

mod compare;
mod invariance;
mod probe;
mod report;

pub use compare::{compare_runs, ComparisonRow, ComparisonTable};
pub use invariance::centroid_invariance;
pub use probe::{train_probe, ProbeConfig, ProbeOutcome, PROBE_STREAM};
pub use report::{attach_probes, evaluate, FactorMetrics, MetricsReport, Side};
