//! `ATSF` checkpoint encoding.
//!
//! Layout: `"ATSF" | version u32 | len u32 + NetSpec bytes | f64 blocks | crc32`.
//! Blocks are `W` then `b` for each layer of `θ_f`, `θ_y`, `θ_c^1..θ_c^R`,
//! then the teacher, all little-endian; shapes follow from the spec.

use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::error::{DecodeError, Error, Result};
use crate::net::{DenseLayer, DenseStack, ModelGraph, NetSpec, Teacher};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ATSF";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(graph: &ModelGraph) -> Vec<u8> {
    let mut w = Writer::with_header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    w.len_prefixed(&graph.spec().encode());
    for block in graph.param_blocks() {
        w.f64s(block.as_slice());
    }
    w.finish()
}

fn read_stack(r: &mut Reader<'_>, dims: &[usize], relu_last: bool) -> Result<DenseStack> {
    let mut layers = Vec::with_capacity(dims.len().saturating_sub(1));
    for d in dims.windows(2) {
        let w = r.matrix(d[0], d[1], "weights")?;
        let b = r.matrix(1, d[1], "bias")?;
        layers.push(DenseLayer { w, b });
    }
    DenseStack::new(layers, relu_last)
}

/// Decodes a checkpoint. With `expect`, the stored spec must equal it.
pub fn decode_checkpoint(bytes: &[u8], expect: Option<&NetSpec>) -> Result<ModelGraph> {
    let mut r = Reader::open(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let spec = NetSpec::decode(r.len_prefixed("net spec")?)?;
    if let Some(e) = expect {
        if e != &spec {
            return Err(Error::spec(alloc::format!("checkpoint holds {spec:?}, expected {e:?}")));
        }
    }
    let td = spec.teacher_dims();
    let feature = read_stack(&mut r, &td[..=spec.split_index], true)?;
    let task = read_stack(&mut r, &td[spec.split_index..], false)?;
    let heads = (0..spec.factors.len())
        .map(|i| read_stack(&mut r, &spec.head_dims(i), false))
        .collect::<Result<Vec<_>>>()?;
    let teacher = Teacher::new(read_stack(&mut r, &td, false)?)?;
    r.expect_end().map_err(|_| Error::Decode(DecodeError::Malformed("trailing parameter bytes")))?;
    ModelGraph::from_parts(spec, feature, task, heads, teacher)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{clone_student_from_teacher, FactorHead};
    use crate::tensor::Rng;
    use alloc::vec;

    fn graph() -> ModelGraph {
        let spec = NetSpec::new(3, vec![5, 4], 2).with_factors(vec![
            FactorHead { name: "environment".into(), classes: 3 },
            FactorHead { name: "speaker".into(), classes: 4 },
        ]);
        let mut rng = Rng::new(1);
        let t = Teacher::new(DenseStack::glorot(&spec.teacher_dims(), false, &mut rng)).unwrap();
        let mut g = clone_student_from_teacher(&t, &spec, 9).unwrap();
        // Make student differ from teacher so block order matters.
        g.feature.layers_mut()[0].w.as_mut_slice()[0] = -0.0;
        g.task.layers_mut()[0].b.as_mut_slice()[1] = 1e-310;
        g
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let g = graph();
        let bytes = encode_checkpoint(&g);
        assert_eq!(&bytes[..4], b"ATSF");
        let back = decode_checkpoint(&bytes, Some(g.spec())).unwrap();
        let a: Vec<u64> = g.param_blocks().flat_map(|m| m.as_slice().iter().map(|v| v.to_bits())).collect();
        let b: Vec<u64> = back.param_blocks().flat_map(|m| m.as_slice().iter().map(|v| v.to_bits())).collect();
        assert_eq!(a, b);
        assert_eq!(encode_checkpoint(&back), bytes);
    }

    #[test]
    fn truncation_and_corruption_are_rejected() {
        let bytes = encode_checkpoint(&graph());
        let err = decode_checkpoint(&bytes[..bytes.len() - 9], None).unwrap_err();
        assert!(matches!(err, Error::Decode(DecodeError::Checksum { .. })));
        let err = decode_checkpoint(&bytes[..5], None).unwrap_err();
        assert!(matches!(err, Error::Decode(DecodeError::Truncated(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        // The CRC covers the version field, so fix it up to reach the version check.
        let n = bad.len() - 4;
        let crc = crc32fast::hash(&bad[..n]);
        bad[n..].copy_from_slice(&crc.to_le_bytes());
        let err = decode_checkpoint(&bad, None).unwrap_err();
        assert!(matches!(err, Error::Decode(DecodeError::Version { found: 2, expected: 1 })));
    }

    #[test]
    fn spec_expectation_enforced() {
        let g = graph();
        let bytes = encode_checkpoint(&g);
        let other = NetSpec::new(3, vec![5, 4], 2);
        assert!(matches!(decode_checkpoint(&bytes, Some(&other)), Err(Error::Spec(_))));
    }
}
