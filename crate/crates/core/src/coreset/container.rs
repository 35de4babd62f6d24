//! Self-describing payload file: a codec body plus what is needed to
//! decode it.
//!
//! ```text
//! magic     4 bytes  "SKCP"
//! version   u8       1
//! codec     u8       1 = cluster with counts, 2 = cluster without counts, 3 = sample
//! size      u8       k or m
//! channels  u8
//! len       u16 LE   window length
//! ranges    channels x (f64 LE min, f64 LE max)
//! body_len  u32 LE
//! body      body_len bytes
//! ```

use super::codec::ClusterLayout;
use crate::dataio::ChannelRange;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SKCP";
const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadCodec {
    Cluster(ClusterLayout),
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayloadFile {
    pub codec: PayloadCodec,
    /// k for cluster bodies, m for sample bodies.
    pub size: usize,
    pub len: usize,
    pub ranges: Vec<ChannelRange>,
    pub body: Vec<u8>,
}

impl PayloadFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let size = u8::try_from(self.size).map_err(|_| Error::format("k or m above 255"))?;
        let channels = u8::try_from(self.ranges.len()).map_err(|_| Error::format("more than 255 channels"))?;
        let len = u16::try_from(self.len).map_err(|_| Error::format("window longer than 65535"))?;
        let mut out = Vec::with_capacity(16 + self.ranges.len() * 16 + self.body.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(match self.codec {
            PayloadCodec::Cluster(ClusterLayout::Recoverable) => 1,
            PayloadCodec::Cluster(ClusterLayout::Plain) => 2,
            PayloadCodec::Sample => 3,
        });
        out.push(size);
        out.push(channels);
        out.extend_from_slice(&len.to_le_bytes());
        for r in &self.ranges {
            out.extend_from_slice(&r.min.to_le_bytes());
            out.extend_from_slice(&r.max.to_le_bytes());
        }
        out.extend_from_slice(&(self.body.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.body);
        Ok(out)
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let short = || Error::format("payload file truncated");
        if b.len() < 10 || &b[..4] != MAGIC {
            return Err(Error::format("not a payload file (bad magic)"));
        }
        if b[4] != VERSION {
            return Err(Error::format(format!("unsupported payload version {}", b[4])));
        }
        let codec = match b[5] {
            1 => PayloadCodec::Cluster(ClusterLayout::Recoverable),
            2 => PayloadCodec::Cluster(ClusterLayout::Plain),
            3 => PayloadCodec::Sample,
            c => return Err(Error::format(format!("unknown codec id {c}"))),
        };
        let (size, channels) = (b[6] as usize, b[7] as usize);
        let len = u16::from_le_bytes([b[8], b[9]]) as usize;
        let mut pos = 10;
        let f64_at = |pos: &mut usize| -> Result<f64> {
            let s = b.get(*pos..*pos + 8).ok_or_else(short)?;
            *pos += 8;
            Ok(f64::from_le_bytes(s.try_into().expect("8 bytes")))
        };
        let mut ranges = Vec::with_capacity(channels);
        for _ in 0..channels {
            let (lo, hi) = (f64_at(&mut pos)?, f64_at(&mut pos)?);
            ranges.push(ChannelRange::new(lo, hi).map_err(|_| Error::format("invalid channel range"))?);
        }
        let n = u32::from_le_bytes(b.get(pos..pos + 4).ok_or_else(short)?.try_into().expect("4 bytes")) as usize;
        pos += 4;
        let body = b.get(pos..pos + n).ok_or_else(short)?.to_vec();
        if pos + n != b.len() {
            return Err(Error::format("trailing bytes after payload body"));
        }
        Ok(PayloadFile {
            codec,
            size,
            len,
            ranges,
            body,
        })
    }
}
