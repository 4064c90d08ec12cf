//! Binary spike matrices stored channel-major.

use crate::error::{check_len, Result};

/// A binary `channels × horizon` matrix. Row `c`, column `t` is the spike of
/// channel `c` at processing step `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeTrain {
    channels: usize,
    horizon: usize,
    bits: Vec<u8>,
}

impl SpikeTrain {
    pub fn zeros(channels: usize, horizon: usize) -> Self {
        Self {
            channels,
            horizon,
            bits: vec![0; channels * horizon],
        }
    }

    /// Builds a train from row-major `channels × horizon` data; any nonzero
    /// entry counts as a spike.
    pub fn from_rows(channels: usize, horizon: usize, data: &[u8]) -> Result<Self> {
        check_len("spike train data", channels * horizon, data.len())?;
        Ok(Self {
            channels,
            horizon,
            bits: data.iter().map(|&b| u8::from(b != 0)).collect(),
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn get(&self, channel: usize, t: usize) -> u8 {
        self.bits[channel * self.horizon + t]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, t: usize, spike: bool) {
        self.bits[channel * self.horizon + t] = u8::from(spike);
    }

    pub fn row(&self, channel: usize) -> &[u8] {
        &self.bits[channel * self.horizon..(channel + 1) * self.horizon]
    }

    /// Column `t` across all channels.
    pub fn column(&self, t: usize) -> Vec<u8> {
        (0..self.channels).map(|c| self.get(c, t)).collect()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn count(&self, channel: usize) -> usize {
        self.row(channel).iter().map(|&b| b as usize).sum()
    }

    pub fn total(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}
