use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::eval::MetricsReport;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: String,
    pub per_condition: Vec<Option<f64>>,
    pub average: f64,
}

/// Per-condition and average task accuracy, one row per run, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub factor: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

/// Tabulates reports by condition of `factor` (the first factor of the first
/// report when `None`). The average is the mean over conditions present in
/// the split; without factors it is the overall accuracy. Rows are sorted by
/// average, descending, keeping input order on ties.
pub fn compare_runs(reports: &[MetricsReport], factor: Option<&str>) -> ComparisonTable {
    let factor: Option<String> =
        factor.map(String::from).or_else(|| reports.first().and_then(|r| r.factors.first()).map(|f| f.factor.clone()));
    let width = reports
        .iter()
        .filter_map(|r| factor.as_deref().and_then(|f| r.factor(f)))
        .map(|f| f.task_accuracy.len())
        .max()
        .unwrap_or(0);
    let columns = (0..width).map(|a| format!("{}{a}", factor.as_deref().unwrap_or(""))).collect();
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| {
            let per_condition: Vec<Option<f64>> = match factor.as_deref().and_then(|f| r.factor(f)) {
                Some(f) => (0..width).map(|a| f.task_accuracy.get(a).copied().flatten()).collect(),
                None => alloc::vec![None; width],
            };
            let present: Vec<f64> = per_condition.iter().flatten().copied().collect();
            let average =
                if present.is_empty() { r.accuracy } else { present.iter().sum::<f64>() / present.len() as f64 };
            ComparisonRow { run: r.run.clone(), per_condition, average }
        })
        .collect();
    rows.sort_by(|a, b| b.average.partial_cmp(&a.average).unwrap_or(core::cmp::Ordering::Equal));
    ComparisonTable { factor, columns, rows }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| String::from("-"), |a| format!("{:.2}", 100.0 * a))
}

impl ComparisonTable {
    /// Fixed-width text table of accuracies in percent.
    pub fn to_text(&self) -> String {
        let name_w = self.rows.iter().map(|r| r.run.len()).chain([6]).max().unwrap_or(6);
        let col_w = self.columns.iter().map(String::len).chain([7]).max().unwrap_or(7);
        let mut out = String::new();
        let _ = write!(out, "{:<name_w$}", "System");
        for c in &self.columns {
            let _ = write!(out, " {c:>col_w$}");
        }
        let _ = writeln!(out, " {:>col_w$}", "Avg.");
        for r in &self.rows {
            let _ = write!(out, "{:<name_w$}", r.run);
            for &v in &r.per_condition {
                let _ = write!(out, " {:>col_w$}", cell(v));
            }
            let _ = writeln!(out, " {:>col_w$}", cell(Some(r.average)));
        }
        out
    }

    /// Comma-separated table with raw fractions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run");
        for c in &self.columns {
            let _ = write!(out, ",{c}");
        }
        out.push_str(",average\n");
        for r in &self.rows {
            out.push_str(&r.run);
            for v in &r.per_condition {
                match v {
                    Some(a) => {
                        let _ = write!(out, ",{a}");
                    }
                    None => out.push(','),
                }
            }
            let _ = writeln!(out, ",{}", r.average);
        }
        out
    }
}
