//! Reading and writing corpus, checkpoint and training-state files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use ats_core::corpus::{decode_corpus, decode_corpus_header, encode_corpus, CorpusSpec, ParallelCorpus};
use ats_core::net::{decode_checkpoint, encode_checkpoint, ModelGraph, NetSpec};
use ats_core::train::TrainState;

use crate::error::CliError;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a sibling temp file and a rename so readers never see a
/// half-written file.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(path, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn with_path<T>(path: &Path, r: ats_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn save_corpus(corpus: &ParallelCorpus, path: &Path) -> Result<(), CliError> {
    write_bytes(path, &encode_corpus(corpus))
}

pub fn load_corpus(path: &Path) -> Result<ParallelCorpus, CliError> {
    with_path(path, decode_corpus(&read_bytes(path)?))
}

/// Reads the spec from the front of a corpus file without touching the frames.
pub fn load_corpus_header(path: &Path) -> Result<CorpusSpec, CliError> {
    let mut f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut head = [0u8; 12];
    f.read_exact(&mut head).map_err(|e| CliError::io(path, e))?;
    let len = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut buf = head.to_vec();
    buf.resize(12 + len, 0);
    f.read_exact(&mut buf[12..]).map_err(|e| CliError::io(path, e))?;
    with_path(path, decode_corpus_header(&buf))
}

pub fn save_checkpoint(graph: &ModelGraph, path: &Path) -> Result<(), CliError> {
    write_bytes(path, &encode_checkpoint(graph))
}

pub fn load_checkpoint(path: &Path, expect: Option<&NetSpec>) -> Result<ModelGraph, CliError> {
    with_path(path, decode_checkpoint(&read_bytes(path)?, expect))
}

pub fn save_state(state: &TrainState, path: &Path) -> Result<(), CliError> {
    write_bytes(path, &state.encode())
}

pub fn load_state(path: &Path) -> Result<TrainState, CliError> {
    with_path(path, TrainState::decode(&read_bytes(path)?))
}

/// One frame per line: index, task label, condition labels, source frame,
/// target frame. Missing labels are left blank.
pub fn corpus_to_csv(corpus: &ParallelCorpus) -> String {
    let spec = corpus.spec();
    let d = spec.input_dim;
    let mut out = String::from("frame,class");
    for f in &spec.factors {
        write!(out, ",{}", f.name).unwrap();
    }
    for side in ["xt", "xs"] {
        for j in 0..d {
            write!(out, ",{side}{j}").unwrap();
        }
    }
    out.push('\n');
    let y = corpus.task_labels();
    for i in 0..corpus.len() {
        write!(out, "{i},").unwrap();
        if let Some(y) = y {
            write!(out, "{}", y[i]).unwrap();
        }
        for r in 0..spec.factors.len() {
            out.push(',');
            if let Some(c) = corpus.condition_labels(r) {
                write!(out, "{}", c[i]).unwrap();
            }
        }
        for v in corpus.source().row(i).iter().chain(corpus.target().row(i)) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
