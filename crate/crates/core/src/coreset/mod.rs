//! Coreset construction and the bit-packed payload bodies that carry them.
//!
//! Two summaries are supported:
//!
//! * [`ClusterCoreset`]: per channel, k clusters in the normalized
//!   (time, value) plane, each with center, radius and member count. The
//!   count makes the summary recoverable: the host can redistribute that many
//!   points inside each disk.
//! * [`SampleCoreset`]: per channel, m importance-sampled (index, value)
//!   pairs plus the first two moments of the full window.

mod budget;
mod codec;
mod container;
mod kmeans;
mod sampling;

pub use budget::{select_cluster_count, ClusterBudgetTable, DEFAULT_K_MAX};
pub use codec::{
    cluster_body_len, decode_cluster, decode_cluster_with, decode_sample, encode_cluster,
    encode_cluster_with, encode_sample, sample_body_len, ClusterLayout, CodecWarning, Encoded,
    CENTER_T_BITS, CENTER_V_BITS, COUNT_BITS, MAX_ENCODED_COUNT, RADIUS_BITS,
};
pub use container::{PayloadCodec, PayloadFile};
pub use kmeans::{kmeans_coreset, lloyd, LloydOutcome, DEFAULT_MAX_ITER};
pub use sampling::{
    importance_weights, importance_weights_with, sample_coreset, DeviationPlusDifference,
    ImportanceWeight, SampleParams,
};

use serde::{Deserialize, Serialize};

use crate::dataio::ChannelRange;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Normalized time, `t / (L - 1)`.
    pub center_t: f64,
    /// Normalized value in [0, 1] against the channel's calibration range.
    pub center_v: f64,
    pub radius: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterCoreset {
    /// Clusters per channel, ordered by `center_t`.
    pub channels: Vec<Vec<Cluster>>,
    /// Window length the coreset summarizes.
    pub len: usize,
    pub quant_meta: Vec<ChannelRange>,
}

impl ClusterCoreset {
    /// Cluster count of the first channel; all channels carry the same k.
    pub fn k_per_channel(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn max_radius(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .map(|c| c.radius)
            .fold(0.0, f64::max)
    }

    pub fn counts_sum(&self, channel: usize) -> usize {
        self.channels[channel].iter().map(|c| c.count).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub index: usize,
    /// Sensor units.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleChannel {
    /// Sorted by strictly increasing index.
    pub points: Vec<SamplePoint>,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCoreset {
    pub channels: Vec<SampleChannel>,
    pub len: usize,
    pub quant_meta: Vec<ChannelRange>,
}

impl SampleCoreset {
    pub fn samples_per_channel(&self) -> usize {
        self.channels.first().map_or(0, |c| c.points.len())
    }
}
