//! Sensor-to-host message framing.
//!
//! Every message is an 8-byte header followed by a body:
//!
//! ```text
//! 0      kind       0 = result, 1 = cluster coreset, 2 = sample coreset
//! 1      node id
//! 2      k (cluster) or m (sample); 0 for results
//! 3      channel count
//! 4..8   window id, u32 little-endian
//! ```
//!
//! A result body is two bytes: class id and `round(confidence * 255)`.
//! Coreset bodies are the codec bodies. Only bodies count toward data volume.

use crate::dataio::ClassId;
use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 8;
pub const RESULT_BODY_LEN: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageBody {
    Result,
    Cluster,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageBody,
    pub node: u8,
    /// k for cluster payloads, m for sample payloads.
    pub size_param: u8,
    pub channels: u8,
    pub window_id: u32,
    pub body: Vec<u8>,
}

impl Message {
    pub fn result(node: u8, window_id: u32, class: ClassId, confidence: f64) -> Result<Self> {
        let class = u8::try_from(class).map_err(|_| Error::format(format!("class id {class} does not fit a result byte")))?;
        let conf = (confidence.clamp(0.0, 1.0) * 255.0).round() as u8;
        Ok(Message {
            kind: MessageBody::Result,
            node,
            size_param: 0,
            channels: 0,
            window_id,
            body: vec![class, conf],
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.body.len());
        out.push(match self.kind {
            MessageBody::Result => 0,
            MessageBody::Cluster => 1,
            MessageBody::Sample => 2,
        });
        out.extend([self.node, self.size_param, self.channels]);
        out.extend(self.window_id.to_le_bytes());
        out.extend(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(format!("message of {} bytes is shorter than its header", bytes.len())));
        }
        let kind = match bytes[0] {
            0 => MessageBody::Result,
            1 => MessageBody::Cluster,
            2 => MessageBody::Sample,
            k => return Err(Error::format(format!("unknown message kind {k}"))),
        };
        let body = bytes[HEADER_LEN..].to_vec();
        if kind == MessageBody::Result && body.len() != RESULT_BODY_LEN {
            return Err(Error::format(format!("result body must be {RESULT_BODY_LEN} bytes, got {}", body.len())));
        }
        Ok(Message {
            kind,
            node: bytes[1],
            size_param: bytes[2],
            channels: bytes[3],
            window_id: u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")),
            body,
        })
    }

    /// Class and confidence carried by a result message.
    pub fn result_payload(&self) -> Option<(ClassId, f64)> {
        (self.kind == MessageBody::Result).then(|| (self.body[0] as ClassId, self.body[1] as f64 / 255.0))
    }
}
