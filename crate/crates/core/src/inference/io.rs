//! Flat binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      4 bytes  "SKQM"
//! version    u8       1
//! bits       u8       32, or 2 to 16 for quantized weights
//! reserved   u16      0
//! len        u32      window length
//! channels   u32
//! hidden     u32
//! classes    u32
//! ranges     channels x (f64 min, f64 max)
//! tensors    w1 (hidden x len*channels), b1 (hidden),
//!            w2 (classes x hidden), b2 (classes), each as
//!              scale  f64   (1.0 for 32-bit models)
//!              values f64 each for 32-bit, i32 each otherwise, row-major
//! ```

use std::fs;
use std::path::Path;

use super::mlp::Mlp;
use super::quant::{InputSpec, QTensor, QuantModel, QuantWeights};
use crate::dataio::ChannelRange;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SKQM";
const VERSION: u8 = 1;

pub fn to_bytes(m: &QuantModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(m.bits as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    for v in [m.input.len, m.input.channels, m.net.hidden, m.net.classes] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for r in &m.input.ranges {
        out.extend_from_slice(&r.min.to_le_bytes());
        out.extend_from_slice(&r.max.to_le_bytes());
    }
    match &m.quant {
        None => {
            for t in [&m.net.w1, &m.net.b1, &m.net.w2, &m.net.b2] {
                out.extend_from_slice(&1.0f64.to_le_bytes());
                for v in t {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Some(q) => {
            for t in [&q.w1, &q.b1, &q.w2, &q.b2] {
                out.extend_from_slice(&t.scale.to_le_bytes());
                for v in &t.q {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::format(format!("model file truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<QuantModel> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::format("not a model file (bad magic)"));
    }
    let header = c.take(4)?;
    if header[0] != VERSION {
        return Err(Error::format(format!("unsupported model version {}", header[0])));
    }
    let bits = header[1] as u32;
    if bits != 32 && !(2..=16).contains(&bits) {
        return Err(Error::format(format!("unsupported bit width {bits}")));
    }
    let (len, channels, hidden, classes) = (c.u32()?, c.u32()?, c.u32()?, c.u32()?);
    let ranges = (0..channels)
        .map(|_| {
            let (lo, hi) = (c.f64()?, c.f64()?);
            ChannelRange::new(lo, hi).map_err(|_| Error::format("invalid channel range"))
        })
        .collect::<Result<Vec<_>>>()?;
    let input_dim = len * channels;
    let sizes = [hidden * input_dim, hidden, classes * hidden, classes];

    let model = if bits == 32 {
        let mut ts = Vec::with_capacity(4);
        for n in sizes {
            c.f64()?;
            ts.push((0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?);
        }
        let mut it = ts.into_iter();
        let net = Mlp {
            input_dim,
            hidden,
            classes,
            w1: it.next().expect("4 tensors"),
            b1: it.next().expect("4 tensors"),
            w2: it.next().expect("4 tensors"),
            b2: it.next().expect("4 tensors"),
        };
        QuantModel {
            bits,
            input: InputSpec { len, channels, ranges },
            net,
            quant: None,
        }
    } else {
        let mut ts = Vec::with_capacity(4);
        for n in sizes {
            let scale = c.f64()?;
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::format("tensor scale must be positive"));
            }
            let q = (0..n).map(|_| c.i32()).collect::<Result<Vec<_>>>()?;
            ts.push(QTensor { q, scale });
        }
        let mut it = ts.into_iter();
        let quant = QuantWeights {
            w1: it.next().expect("4 tensors"),
            b1: it.next().expect("4 tensors"),
            w2: it.next().expect("4 tensors"),
            b2: it.next().expect("4 tensors"),
        };
        let net = Mlp {
            input_dim,
            hidden,
            classes,
            w1: quant.w1.dequantize(),
            b1: quant.b1.dequantize(),
            w2: quant.w2.dequantize(),
            b2: quant.b2.dequantize(),
        };
        QuantModel {
            bits,
            input: InputSpec { len, channels, ranges },
            net,
            quant: Some(quant),
        }
    };
    if c.pos != bytes.len() {
        return Err(Error::format("trailing bytes after model"));
    }
    Ok(model)
}

pub fn save_model(m: &QuantModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<QuantModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{quantize, train, TrainConfig};
    use crate::dataio::{gen_synthetic, window_stream, SyntheticSpec};

    #[test]
    fn save_load_preserves_models() {
        let s = gen_synthetic(&SyntheticSpec::new(3, 6, 2, 60, 0.1, 1)).unwrap();
        let w = window_stream(&s, 60, 30).unwrap();
        let m = train(&w, &TrainConfig { epochs: 2, hidden: 8, ..Default::default() }).unwrap();
        for model in [m.clone(), quantize(&m, 16).unwrap(), quantize(&m, 12).unwrap()] {
            let bytes = to_bytes(&model);
            assert_eq!(&bytes[..4], b"SKQM");
            assert_eq!(from_bytes(&bytes).unwrap(), model);
            assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}
