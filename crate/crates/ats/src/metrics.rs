//! Line-delimited JSON metric records.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ats_core::eval::MetricsReport;
use ats_core::train::EpochStats;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Epoch {
        run: String,
        #[serde(flatten)]
        stats: EpochStats,
    },
    Eval(MetricsReport),
}

pub struct MetricsLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsLog {
    /// Opens `path` for appending, creating it if needed.
    pub fn append(path: &Path) -> Result<Self, CliError> {
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(f) })
    }

    pub fn write(&mut self, record: &Record) -> Result<(), CliError> {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(self.out, "{line}").and_then(|_| self.out.flush()).map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn read_records(path: &Path) -> Result<Vec<Record>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Reads a report from a `.json` file, or the last eval record of a `.jsonl` log.
pub fn read_report(path: &Path) -> Result<MetricsReport, CliError> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return read_records(path)?
            .into_iter()
            .rev()
            .find_map(|r| match r {
                Record::Eval(m) => Some(m),
                Record::Epoch { .. } => None,
            })
            .ok_or_else(|| CliError::Data(format!("{}: no eval record", path.display())));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ats_core::eval::Side;
    use ats_core::loss::LossBreakdown;

    #[test]
    fn records_round_trip_one_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let epoch = Record::Epoch {
            run: "ts".into(),
            stats: EpochStats { epoch: 1, step: 10, losses: LossBreakdown::new(0.5, vec![1.0], 5.0, 0.1).unwrap() },
        };
        let eval = Record::Eval(MetricsReport {
            run: "ts".into(),
            split: "test".into(),
            side: Side::Target,
            epoch: 1,
            step: 10,
            frames: 3,
            mean_l_ts: 0.4,
            mean_kl: 0.1,
            accuracy: 2.0 / 3.0,
            factors: vec![],
        });
        {
            let mut log = MetricsLog::append(&p).unwrap();
            log.write(&epoch).unwrap();
        }
        let mut log = MetricsLog::append(&p).unwrap();
        log.write(&eval).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains("\"kind\":\"epoch\""));
        assert_eq!(read_records(&p).unwrap(), vec![epoch, eval.clone()]);
        let Record::Eval(m) = eval else { unreachable!() };
        assert_eq!(read_report(&p).unwrap(), m);
    }
}
