//! Binary spike dataset files.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "OWSPIKE\0"
//! 8       4     version (1)
//! 12      4     num_examples
//! 16      4     in_channels
//! 20      4     out_channels
//! 24      4     horizon T
//! 28      ...   num_examples records
//! ```
//!
//! Each record is `label: u32`, `horizon: u32` (must equal the header's `T`),
//! then the `x` payload and the `y` payload. A payload packs a
//! `channels × T` matrix in row-major channel-time order, bit `n` of the
//! matrix stored in byte `n / 8` at bit position `n % 8` (LSB first), padded
//! with zero bits to a whole byte. Nothing may follow the last record.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::Example;
use crate::spikes::SpikeTrain;

pub const MAGIC: [u8; 8] = *b"OWSPIKE\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic at offset 0")]
    BadMagic,
    #[error("unsupported version {version} at offset {offset}")]
    UnsupportedVersion { offset: usize, version: u32 },
    #[error("truncated file: need {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{field} mismatch at offset {offset}: header says {expected}, found {found}")]
    DimensionMismatch {
        offset: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("label {label} at offset {offset} out of range for {classes} output channels")]
    InvalidLabel {
        offset: usize,
        label: usize,
        classes: usize,
    },
    #[error("nonzero padding bits in payload ending at offset {offset}")]
    NonZeroPadding { offset: usize },
    #[error("{extra} trailing bytes at offset {offset}")]
    TrailingData { offset: usize, extra: usize },
}

/// A flat collection of examples sharing one dimensional signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDataset {
    pub in_channels: usize,
    pub out_channels: usize,
    pub horizon: usize,
    pub examples: Vec<Example>,
}

fn packed_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

fn pack(train: &SpikeTrain, out: &mut Vec<u8>) {
    let start = out.len();
    out.resize(start + packed_len(train.as_slice().len()), 0);
    for (n, &b) in train.as_slice().iter().enumerate() {
        if b != 0 {
            out[start + n / 8] |= 1 << (n % 8);
        }
    }
}

pub fn write_dataset<W: Write>(ds: &TaskDataset, mut w: W) -> Result<(), DatasetError> {
    let dim = |field, expected: usize, found: usize| {
        if expected == found {
            Ok(())
        } else {
            Err(DatasetError::DimensionMismatch {
                offset: 0,
                field,
                expected,
                found,
            })
        }
    };
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "count exceeds u32"))
    };
    let mut buf = Vec::with_capacity(HEADER_LEN);
    buf.extend_from_slice(&MAGIC);
    for v in [
        VERSION,
        to_u32(ds.examples.len())?,
        to_u32(ds.in_channels)?,
        to_u32(ds.out_channels)?,
        to_u32(ds.horizon)?,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for ex in &ds.examples {
        dim("in_channels", ds.in_channels, ex.x.channels())?;
        dim("out_channels", ds.out_channels, ex.y.channels())?;
        dim("horizon", ds.horizon, ex.x.horizon())?;
        dim("horizon", ds.horizon, ex.y.horizon())?;
        if ds.out_channels > 0 && ex.label >= ds.out_channels {
            return Err(DatasetError::InvalidLabel {
                offset: buf.len(),
                label: ex.label,
                classes: ds.out_channels,
            });
        }
        buf.extend_from_slice(&to_u32(ex.label)?.to_le_bytes());
        buf.extend_from_slice(&to_u32(ds.horizon)?.to_le_bytes());
        pack(&ex.x, &mut buf);
        pack(&ex.y, &mut buf);
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let available = self.data.len() - self.pos;
        if n > available {
            return Err(DatasetError::Truncated {
                offset: self.pos,
                needed: n,
                available,
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn train(&mut self, channels: usize, horizon: usize) -> Result<SpikeTrain, DatasetError> {
        let bits = channels * horizon;
        let bytes = self.take(packed_len(bits))?;
        if bits % 8 != 0 && bytes[bytes.len() - 1] >> (bits % 8) != 0 {
            return Err(DatasetError::NonZeroPadding { offset: self.pos });
        }
        let data: Vec<u8> = (0..bits).map(|n| (bytes[n / 8] >> (n % 8)) & 1).collect();
        Ok(SpikeTrain::from_rows(channels, horizon, &data).expect("length matches"))
    }
}

/// Parses a dataset from an in-memory byte buffer.
pub fn read_dataset_bytes(data: &[u8]) -> Result<TaskDataset, DatasetError> {
    let mut cur = Cursor { data, pos: 0 };
    if data.len() < MAGIC.len() {
        return Err(DatasetError::Truncated {
            offset: 0,
            needed: HEADER_LEN,
            available: data.len(),
        });
    }
    if cur.take(MAGIC.len())? != MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(DatasetError::UnsupportedVersion {
            offset: 8,
            version,
        });
    }
    let num_examples = cur.u32()? as usize;
    let in_channels = cur.u32()? as usize;
    let out_channels = cur.u32()? as usize;
    let horizon = cur.u32()? as usize;
    let record_len = 8 + packed_len(in_channels * horizon) + packed_len(out_channels * horizon);
    // Reject impossible counts before allocating.
    let remaining = data.len() - cur.pos;
    if num_examples.saturating_mul(record_len) > remaining {
        let whole = remaining / record_len.max(1);
        return Err(DatasetError::Truncated {
            offset: cur.pos + whole * record_len,
            needed: record_len,
            available: remaining - whole * record_len,
        });
    }
    let mut examples = Vec::with_capacity(num_examples);
    for _ in 0..num_examples {
        let rec_start = cur.pos;
        let label = cur.u32()? as usize;
        let rec_horizon = cur.u32()? as usize;
        if rec_horizon != horizon {
            return Err(DatasetError::DimensionMismatch {
                offset: rec_start + 4,
                field: "horizon",
                expected: horizon,
                found: rec_horizon,
            });
        }
        if out_channels > 0 && label >= out_channels {
            return Err(DatasetError::InvalidLabel {
                offset: rec_start,
                label,
                classes: out_channels,
            });
        }
        let x = cur.train(in_channels, horizon)?;
        let y = cur.train(out_channels, horizon)?;
        examples.push(Example { x, y, label });
    }
    if cur.pos != data.len() {
        return Err(DatasetError::TrailingData {
            offset: cur.pos,
            extra: data.len() - cur.pos,
        });
    }
    Ok(TaskDataset {
        in_channels,
        out_channels,
        horizon,
        examples,
    })
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<TaskDataset, DatasetError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    read_dataset_bytes(&data)
}

pub fn save_spike_dataset(ds: &TaskDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_spike_dataset(path: impl AsRef<Path>) -> Result<TaskDataset, DatasetError> {
    read_dataset_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TaskDataset {
        let x = SpikeTrain::from_rows(3, 3, &[1, 0, 1, 0, 0, 1, 1, 1, 0]).unwrap();
        let y = SpikeTrain::from_rows(2, 3, &[1, 1, 1, 0, 0, 0]).unwrap();
        TaskDataset {
            in_channels: 3,
            out_channels: 2,
            horizon: 3,
            examples: vec![Example { x, y, label: 0 }],
        }
    }

    #[test]
    fn empty_dataset_roundtrip() {
        let ds = TaskDataset {
            in_channels: 4,
            out_channels: 2,
            horizon: 10,
            examples: vec![],
        };
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN);
        assert_eq!(read_dataset_bytes(&buf).unwrap(), ds);
    }

    #[test]
    fn byte_layout() {
        let mut buf = Vec::new();
        write_dataset(&tiny(), &mut buf).unwrap();
        assert_eq!(&buf[..8], b"OWSPIKE\0");
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        // label, horizon, x = 9 bits -> 2 bytes, y = 6 bits -> 1 byte
        assert_eq!(buf.len(), HEADER_LEN + 8 + 2 + 1);
        // x bits 1,0,1,0,0,1,1,1 | 0 -> 0b1110_0101, 0
        assert_eq!(buf[HEADER_LEN + 8], 0b1110_0101);
        assert_eq!(buf[HEADER_LEN + 9], 0);
        assert_eq!(buf[HEADER_LEN + 10], 0b0000_0111);
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let mut buf = Vec::new();
        write_dataset(&tiny(), &mut buf).unwrap();
        buf[HEADER_LEN + 4] = 4;
        assert!(matches!(
            read_dataset_bytes(&buf),
            Err(DatasetError::DimensionMismatch { field: "horizon", offset, .. }) if offset == HEADER_LEN + 4
        ));
    }
}
