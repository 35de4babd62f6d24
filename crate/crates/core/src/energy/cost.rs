use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Energy;
use crate::error::{Error, Result};

/// Body size of a k = 12, single-channel cluster payload.
pub const ANCHOR_PAYLOAD_BYTES: usize = 42;
/// Body size of a raw 60-sample single-channel window of f32 values.
pub const RAW_ANCHOR_BYTES: usize = 240;

const RESULT_COMM_UJ: f64 = 8.27;
const ANCHOR_COMM_UJ: f64 = 15.97;
const RAW_COMM_UJ: f64 = 70.16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    /// A classification result.
    Result,
    /// A coreset or raw-data payload.
    Payload,
}

/// Radio energy (µJ) for a message with a body of `body_bytes`.
///
/// Results cost a flat 8.27 µJ. Payloads follow the line through
/// (42 B, 15.97 µJ) and (240 B, 70.16 µJ).
pub fn comm_energy(body_bytes: usize, kind: MessageKind) -> f64 {
    match kind {
        MessageKind::Result => RESULT_COMM_UJ,
        MessageKind::Payload => affine(ANCHOR_COMM_UJ, RAW_COMM_UJ, body_bytes),
    }
}

fn affine(anchor_uj: f64, raw_uj: f64, bytes: usize) -> f64 {
    let per_byte = (raw_uj - anchor_uj) / (RAW_ANCHOR_BYTES - ANCHOR_PAYLOAD_BYTES) as f64;
    anchor_uj + per_byte * (bytes as f64 - ANCHOR_PAYLOAD_BYTES as f64)
}

/// What a node does with one window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Memoized: the window matches a stored class template.
    D0,
    /// Local inference with the 16-bit model.
    D1,
    /// Local inference with the 12-bit model.
    D2,
    /// Clustering coreset sent to the host.
    D3,
    /// Importance-sampling coreset sent to the host.
    D4,
    Drop,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [Strategy::D0, Strategy::D1, Strategy::D2, Strategy::D3, Strategy::D4, Strategy::Drop];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::D0 => "D0",
            Strategy::D1 => "D1",
            Strategy::D2 => "D2",
            Strategy::D3 => "D3",
            Strategy::D4 => "D4",
            Strategy::Drop => "DROP",
        }
    }

    /// Resolved on the node without offloading data.
    pub fn is_edge(self) -> bool {
        matches!(self, Strategy::D0 | Strategy::D1 | Strategy::D2)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown strategy '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyCost {
    pub sensor_uj: f64,
    pub comm_uj: f64,
}

impl StrategyCost {
    pub fn total_uj(&self) -> f64 {
        self.sensor_uj + self.comm_uj
    }
}

/// All-inclusive per-window cost of each strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub d0: StrategyCost,
    pub d1: StrategyCost,
    pub d2: StrategyCost,
    pub d3: StrategyCost,
    pub d4: StrategyCost,
    /// Sending the raw window; only its `comm_uj` is used, to fix the slope
    /// of the per-byte payload model.
    pub raw: StrategyCost,
}

impl Default for CostTable {
    fn default() -> Self {
        let row = |sensor_uj, comm_uj| StrategyCost { sensor_uj, comm_uj };
        CostTable {
            d0: row(0.54, RESULT_COMM_UJ),
            d1: row(29.23, RESULT_COMM_UJ),
            d2: row(16.58, RESULT_COMM_UJ),
            d3: row(1.07, ANCHOR_COMM_UJ),
            d4: row(0.87, ANCHOR_COMM_UJ),
            raw: row(0.0, RAW_COMM_UJ),
        }
    }
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("d0", self.d0), ("d1", self.d1), ("d2", self.d2), ("d3", self.d3), ("d4", self.d4), ("raw", self.raw)] {
            if !(c.sensor_uj >= 0.0 && c.comm_uj >= 0.0 && c.total_uj().is_finite()) {
                return Err(Error::config(format!("cost_table.{name} must be finite and non-negative")));
            }
        }
        if self.raw.comm_uj < self.d3.comm_uj {
            return Err(Error::config("cost_table.raw.comm_uj must be at least cost_table.d3.comm_uj"));
        }
        Ok(())
    }

    pub fn row(&self, s: Strategy) -> Option<StrategyCost> {
        match s {
            Strategy::D0 => Some(self.d0),
            Strategy::D1 => Some(self.d1),
            Strategy::D2 => Some(self.d2),
            Strategy::D3 => Some(self.d3),
            Strategy::D4 => Some(self.d4),
            Strategy::Drop => None,
        }
    }

    /// Table cost of a fixed-size strategy. D3 here means the default k.
    pub fn cost(&self, s: Strategy) -> Energy {
        self.row(s).map_or(Energy::ZERO, |r| Energy::from_uj(r.total_uj()))
    }

    /// D3 whose body is `bytes` long where the default-k body is
    /// `anchor_bytes`: the table row shifted along the per-byte slope.
    pub fn d3_cost(&self, bytes: usize, anchor_bytes: usize) -> Energy {
        let per_byte = (self.raw.comm_uj - self.d3.comm_uj) / (RAW_ANCHOR_BYTES - ANCHOR_PAYLOAD_BYTES) as f64;
        let comm = self.d3.comm_uj + per_byte * (bytes as f64 - anchor_bytes as f64);
        Energy::from_uj(self.d3.sensor_uj + comm.max(0.0))
    }
}
