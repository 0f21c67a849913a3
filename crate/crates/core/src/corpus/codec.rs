//! `ATSC` corpus encoding.
//!
//! Layout: `"ATSC" | version u32 | len u32 + CorpusSpec bytes | rows u64 |
//! x_T f64 block | x_S f64 block | has_task_labels u8 | [y u32 × rows] |
//! per factor: has_labels u8 + [labels u32 × rows] | crc32`.

use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::corpus::{CorpusSpec, ParallelCorpus};
use crate::error::{DecodeError, Result};

pub const CORPUS_MAGIC: [u8; 4] = *b"ATSC";
pub const CORPUS_VERSION: u32 = 1;

fn labels_u32(labels: &[usize]) -> Vec<u32> {
    labels.iter().map(|&l| l as u32).collect()
}

fn write_labels(w: &mut Writer, labels: Option<&[usize]>) {
    match labels {
        Some(l) => {
            w.u8(1);
            w.u32s(&labels_u32(l));
        }
        None => w.u8(0),
    }
}

fn read_labels(r: &mut Reader<'_>, n: usize, what: &'static str) -> core::result::Result<Option<Vec<usize>>, DecodeError> {
    match r.u8(what)? {
        0 => Ok(None),
        1 => Ok(Some(r.u32s(n, what)?.into_iter().map(|v| v as usize).collect())),
        _ => Err(DecodeError::Malformed(what)),
    }
}

pub fn encode_corpus(corpus: &ParallelCorpus) -> Vec<u8> {
    let mut w = Writer::with_header(CORPUS_MAGIC, CORPUS_VERSION);
    w.len_prefixed(&corpus.spec().encode());
    w.u64(corpus.len() as u64);
    w.f64s(corpus.source().as_slice());
    w.f64s(corpus.target().as_slice());
    write_labels(&mut w, corpus.task_labels());
    for r in 0..corpus.spec().factors.len() {
        write_labels(&mut w, corpus.condition_labels(r));
    }
    w.finish()
}

pub fn decode_corpus(bytes: &[u8]) -> Result<ParallelCorpus> {
    let mut r = Reader::open(bytes, CORPUS_MAGIC, CORPUS_VERSION)?;
    let spec = CorpusSpec::decode(r.len_prefixed("corpus spec")?)?;
    let n = r.u64("rows")? as usize;
    let x_t = r.matrix(n, spec.input_dim, "source frames")?;
    let x_s = r.matrix(n, spec.input_dim, "target frames")?;
    let y = read_labels(&mut r, n, "task labels")?;
    let cond = (0..spec.factors.len())
        .map(|_| read_labels(&mut r, n, "condition labels"))
        .collect::<core::result::Result<Vec<_>, _>>()?;
    r.expect_end()?;
    ParallelCorpus::new(spec, x_t, x_s, y, cond)
}

/// Reads only magic, version and spec from the front of a corpus file. The
/// checksum is not verified; `prefix` may stop right after the spec.
pub fn decode_corpus_header(prefix: &[u8]) -> Result<CorpusSpec> {
    let mut r = Reader::new(prefix);
    r.header(CORPUS_MAGIC, CORPUS_VERSION)?;
    Ok(CorpusSpec::decode(r.len_prefixed("corpus spec")?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, FactorSpec};
    use crate::error::Error;
    use alloc::vec;

    fn corpus() -> ParallelCorpus {
        generate(&CorpusSpec {
            n_frames: 50,
            input_dim: 3,
            n_classes: 2,
            factors: vec![FactorSpec { name: "environment".into(), cardinality: 2, transform_strength: 0.7 }],
            class_separation: 2.0,
            noise_sigma: 0.5,
            target_noise_sigma: 0.1,
            seed: 3,
            include_identity_condition: true,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let c = corpus();
        let bytes = encode_corpus(&c);
        let back = decode_corpus(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode_corpus(&back), bytes);
        let unlabeled = c.clone().without_task_labels();
        assert_eq!(decode_corpus(&encode_corpus(&unlabeled)).unwrap(), unlabeled);
    }

    #[test]
    fn flipped_byte_fails_crc() {
        let mut bytes = encode_corpus(&corpus());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x20;
        assert!(matches!(decode_corpus(&bytes), Err(Error::Decode(DecodeError::Checksum { .. }))));
    }

    #[test]
    fn header_only_read() {
        let c = corpus();
        let bytes = encode_corpus(&c);
        let spec_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let spec = decode_corpus_header(&bytes[..12 + spec_len]).unwrap();
        assert_eq!(&spec, c.spec());
    }
}
