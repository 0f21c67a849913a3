use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::error::{DecodeError, Result};
use crate::loss::LossBreakdown;
use crate::tensor::{Rng, RngPosition};

const STATE_MAGIC: [u8; 4] = *b"ATST";
const STATE_VERSION: u32 = 1;

/// Per-frame mean losses over one epoch.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochStats {
    pub epoch: usize,
    pub step: usize,
    pub losses: LossBreakdown,
}

/// Resumable position of a training run, taken at an epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub epoch: usize,
    pub step: usize,
    pub shuffle_rng: Rng,
    /// Running per-frame averages of the last completed epoch.
    pub running: LossBreakdown,
}

impl TrainState {
    pub fn new(seed: u64) -> Self {
        Self {
            epoch: 0,
            step: 0,
            shuffle_rng: Rng::stream(seed, super::SHUFFLE_STREAM),
            running: LossBreakdown::default(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_header(STATE_MAGIC, STATE_VERSION);
        w.u64(self.epoch as u64);
        w.u64(self.step as u64);
        let pos = self.shuffle_rng.position();
        w.len_prefixed(&pos.key);
        w.u64(pos.stream);
        w.u64(pos.word as u64);
        w.u64((pos.word >> 64) as u64);
        w.f64(self.running.l_ts);
        w.u32(self.running.l_cond.len() as u32);
        w.f64s(&self.running.l_cond);
        w.f64(self.running.l_total);
        w.f64(self.running.kl_diag);
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::open(bytes, STATE_MAGIC, STATE_VERSION)?;
        let epoch = r.u64("epoch")? as usize;
        let step = r.u64("step")? as usize;
        let key: [u8; 32] = r.len_prefixed("rng key")?.try_into().map_err(|_| DecodeError::Malformed("rng key"))?;
        let stream = r.u64("rng stream")?;
        let word = r.u64("rng position")? as u128 | (r.u64("rng position")? as u128) << 64;
        let l_ts = r.f64("l_ts")?;
        let n = r.u32("l_cond")? as usize;
        let l_cond = r.f64s(n, "l_cond")?;
        let l_total = r.f64("l_total")?;
        let kl_diag = r.f64("kl")?;
        r.expect_end()?;
        Ok(Self {
            epoch,
            step,
            shuffle_rng: Rng::from_position(RngPosition { key, stream, word }),
            running: LossBreakdown { l_ts, l_cond, l_total, kl_diag },
        })
    }
}
