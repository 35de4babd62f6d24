//! Bit-exact payload bodies.
//!
//! Cluster body, per channel: `k` 24-bit records
//! `[center_t:6][center_v:10][radius:8]`, then (recoverable layout only) `k`
//! 4-bit fields holding `count - 1`, zero-padded to a byte boundary.
//! Sample body, per channel: `m` 16-bit records `[index:6][value:10]`, then a
//! 16-bit mean and a 16-bit variance. Fields are written most significant
//! bit first; channels are concatenated.

use serde::{Deserialize, Serialize};

use super::{Cluster, ClusterCoreset, SampleChannel, SampleCoreset, SamplePoint};
use crate::dataio::ChannelRange;
use crate::error::{Error, Result};

pub const CENTER_T_BITS: u32 = 6;
pub const CENTER_V_BITS: u32 = 10;
pub const RADIUS_BITS: u32 = 8;
pub const COUNT_BITS: u32 = 4;
pub const MAX_ENCODED_COUNT: usize = 1 << COUNT_BITS;

const INDEX_BITS: u32 = 6;
const VALUE_BITS: u32 = 10;
const MOMENT_BITS: u32 = 16;

const MAX_LEN: usize = 1 << CENTER_T_BITS;
const MAX_K: usize = (1 << CENTER_T_BITS) - 1;

fn max_code(bits: u32) -> f64 {
    ((1u32 << bits) - 1) as f64
}

fn quantize(x: f64, bits: u32) -> u32 {
    (x.clamp(0.0, 1.0) * max_code(bits)).round() as u32
}

fn dequantize(q: u32, bits: u32) -> f64 {
    q as f64 / max_code(bits)
}

struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { bytes: Vec::new(), used: 0 }
    }

    fn push(&mut self, value: u32, width: u32) {
        debug_assert!(width == 32 || value < (1 << width));
        for shift in (0..width).rev() {
            if self.used % 8 == 0 {
                self.bytes.push(0);
            }
            let bit = ((value >> shift) & 1) as u8;
            let last = self.bytes.last_mut().expect("pushed above");
            *last |= bit << (7 - self.used % 8);
            self.used += 1;
        }
    }

    fn align(&mut self) {
        self.used = self.bytes.len() * 8;
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn read(&mut self, width: u32) -> u32 {
        let mut v = 0;
        for _ in 0..width {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u32;
            self.pos += 1;
        }
        v
    }

    fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterLayout {
    /// Centers, radii and per-cluster counts.
    Recoverable,
    /// Centers and radii only.
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodecWarning {
    /// A cluster held more points than the count field can carry.
    CountClamped { channel: usize, cluster: usize, count: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub warnings: Vec<CodecWarning>,
}

/// Body size of a cluster coreset.
pub fn cluster_body_len(k: usize, channels: usize, layout: ClusterLayout) -> usize {
    let record = (CENTER_T_BITS + CENTER_V_BITS + RADIUS_BITS) as usize;
    let count = match layout {
        ClusterLayout::Recoverable => COUNT_BITS as usize,
        ClusterLayout::Plain => 0,
    };
    channels * (k * (record + count)).div_ceil(8)
}

pub fn sample_body_len(m: usize, channels: usize) -> usize {
    channels * (m * (INDEX_BITS + VALUE_BITS) as usize + 2 * MOMENT_BITS as usize) / 8
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || len > MAX_LEN {
        return Err(Error::format(format!("window length {len} outside 1..={MAX_LEN}")));
    }
    Ok(())
}

fn t_scale(len: usize) -> f64 {
    if len > 1 {
        (len - 1) as f64
    } else {
        1.0
    }
}

pub fn encode_cluster(c: &ClusterCoreset) -> Result<Encoded> {
    encode_cluster_with(c, ClusterLayout::Recoverable)
}

pub fn encode_cluster_with(c: &ClusterCoreset, layout: ClusterLayout) -> Result<Encoded> {
    check_len(c.len)?;
    let k = c.k_per_channel();
    if k == 0 || k > MAX_K {
        return Err(Error::format(format!("k = {k} outside 1..={MAX_K}")));
    }
    if c.channels.iter().any(|ch| ch.len() != k) {
        return Err(Error::format("all channels must carry the same number of clusters"));
    }
    if c.quant_meta.len() != c.channels.len() {
        return Err(Error::format("quant_meta does not match channel count"));
    }
    let scale = t_scale(c.len);
    let mut w = BitWriter::new();
    let mut warnings = Vec::new();
    for (ci, clusters) in c.channels.iter().enumerate() {
        for cl in clusters {
            let t = (cl.center_t.clamp(0.0, 1.0) * scale).round() as u32;
            w.push(t, CENTER_T_BITS);
            w.push(quantize(cl.center_v, CENTER_V_BITS), CENTER_V_BITS);
            w.push(quantize(cl.radius.min(1.0), RADIUS_BITS), RADIUS_BITS);
        }
        if layout == ClusterLayout::Recoverable {
            for (j, cl) in clusters.iter().enumerate() {
                if cl.count == 0 {
                    return Err(Error::format(format!("channel {ci} cluster {j} is empty")));
                }
                if cl.count > MAX_ENCODED_COUNT {
                    warnings.push(CodecWarning::CountClamped {
                        channel: ci,
                        cluster: j,
                        count: cl.count,
                    });
                }
                w.push((cl.count.min(MAX_ENCODED_COUNT) - 1) as u32, COUNT_BITS);
            }
        }
        w.align();
    }
    Ok(Encoded {
        bytes: w.bytes,
        warnings,
    })
}

pub fn decode_cluster(bytes: &[u8], k: usize, channels: usize, len: usize, quant_meta: &[ChannelRange]) -> Result<ClusterCoreset> {
    decode_cluster_with(bytes, k, channels, len, quant_meta, ClusterLayout::Recoverable)
}

/// Inverse of [`encode_cluster_with`]. The plain layout carries no counts,
/// so its clusters decode with `count = 0`.
pub fn decode_cluster_with(
    bytes: &[u8],
    k: usize,
    channels: usize,
    len: usize,
    quant_meta: &[ChannelRange],
    layout: ClusterLayout,
) -> Result<ClusterCoreset> {
    check_len(len)?;
    if k == 0 || k > MAX_K {
        return Err(Error::format(format!("k = {k} outside 1..={MAX_K}")));
    }
    if quant_meta.len() != channels {
        return Err(Error::format("quant_meta does not match channel count"));
    }
    let expected = cluster_body_len(k, channels, layout);
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "cluster body is {} bytes, expected {expected} for k={k}, C={channels}",
            bytes.len()
        )));
    }
    let scale = t_scale(len);
    let mut r = BitReader::new(bytes);
    let mut out = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut clusters: Vec<Cluster> = (0..k)
            .map(|_| {
                let t = r.read(CENTER_T_BITS);
                let v = r.read(CENTER_V_BITS);
                let rad = r.read(RADIUS_BITS);
                Cluster {
                    center_t: t as f64 / scale,
                    center_v: dequantize(v, CENTER_V_BITS),
                    radius: dequantize(rad, RADIUS_BITS),
                    count: 0,
                }
            })
            .collect();
        if layout == ClusterLayout::Recoverable {
            for cl in &mut clusters {
                cl.count = r.read(COUNT_BITS) as usize + 1;
            }
        }
        r.align();
        out.push(clusters);
    }
    Ok(ClusterCoreset {
        channels: out,
        len,
        quant_meta: quant_meta.to_vec(),
    })
}

pub fn encode_sample(s: &SampleCoreset) -> Result<Encoded> {
    check_len(s.len)?;
    let m = s.samples_per_channel();
    if s.channels.iter().any(|ch| ch.points.len() != m) {
        return Err(Error::format("all channels must carry the same number of samples"));
    }
    if s.quant_meta.len() != s.channels.len() {
        return Err(Error::format("quant_meta does not match channel count"));
    }
    let mut w = BitWriter::new();
    for (ch, range) in s.channels.iter().zip(&s.quant_meta) {
        for p in &ch.points {
            if p.index >= s.len {
                return Err(Error::format(format!("sample index {} outside window of {}", p.index, s.len)));
            }
            w.push(p.index as u32, INDEX_BITS);
            w.push(quantize(range.normalize(p.value), VALUE_BITS), VALUE_BITS);
        }
        w.push(quantize(range.normalize(ch.mean), MOMENT_BITS), MOMENT_BITS);
        w.push(quantize(ch.variance / range.span().powi(2), MOMENT_BITS), MOMENT_BITS);
    }
    Ok(Encoded {
        bytes: w.bytes,
        warnings: Vec::new(),
    })
}

pub fn decode_sample(bytes: &[u8], m: usize, channels: usize, len: usize, quant_meta: &[ChannelRange]) -> Result<SampleCoreset> {
    check_len(len)?;
    if quant_meta.len() != channels {
        return Err(Error::format("quant_meta does not match channel count"));
    }
    let expected = sample_body_len(m, channels);
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "sample body is {} bytes, expected {expected} for m={m}, C={channels}",
            bytes.len()
        )));
    }
    let mut r = BitReader::new(bytes);
    let mut out = Vec::with_capacity(channels);
    for range in quant_meta {
        let points = (0..m)
            .map(|_| {
                let index = r.read(INDEX_BITS) as usize;
                let q = r.read(VALUE_BITS);
                SamplePoint {
                    index,
                    value: range.denormalize(dequantize(q, VALUE_BITS)),
                }
            })
            .collect::<Vec<_>>();
        if points.iter().any(|p| p.index >= len) || points.windows(2).any(|w| w[1].index <= w[0].index) {
            return Err(Error::format("sample indices must be strictly increasing and inside the window"));
        }
        let mean = range.denormalize(dequantize(r.read(MOMENT_BITS), MOMENT_BITS));
        let variance = dequantize(r.read(MOMENT_BITS), MOMENT_BITS) * range.span().powi(2);
        out.push(SampleChannel { points, mean, variance });
    }
    Ok(SampleCoreset {
        channels: out,
        len,
        quant_meta: quant_meta.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coreset::{kmeans_coreset, sample_coreset, SampleParams};
    use crate::dataio::SensorWindow;
    use proptest::prelude::*;

    fn unit() -> ChannelRange {
        ChannelRange::new(0.0, 1.0).unwrap()
    }

    fn wave(len: usize) -> SensorWindow {
        let v: Vec<f64> = (0..len).map(|i| 0.5 + 0.45 * (i as f64 * 0.35).sin()).collect();
        SensorWindow::from_channels(&[v], vec![unit()]).unwrap()
    }

    #[test]
    fn body_sizes() {
        assert_eq!(cluster_body_len(12, 1, ClusterLayout::Recoverable), 42);
        assert_eq!(cluster_body_len(12, 1, ClusterLayout::Plain), 36);
        assert_eq!(cluster_body_len(1, 1, ClusterLayout::Recoverable), 4);
        assert_eq!(sample_body_len(20, 1), 44);

        let c = kmeans_coreset(&wave(60), 12, 4).unwrap();
        assert_eq!(encode_cluster(&c).unwrap().bytes.len(), 42);
        assert_eq!(encode_cluster_with(&c, ClusterLayout::Plain).unwrap().bytes.len(), 36);
        let c1 = kmeans_coreset(&wave(60), 1, 4).unwrap();
        assert_eq!(encode_cluster(&c1).unwrap().bytes.len(), 4);
    }

    #[test]
    fn bit_order_is_msb_first() {
        let c = ClusterCoreset {
            channels: vec![vec![Cluster { center_t: 1.0, center_v: 1.0, radius: 0.0, count: 1 }]],
            len: 64,
            quant_meta: vec![unit()],
        };
        // t = 63 -> 111111, v = 1023 -> 1111111111, r = 0, count-1 = 0, pad.
        let e = encode_cluster(&c).unwrap();
        assert_eq!(e.bytes, vec![0xFF, 0xFF, 0x00, 0x00]);
    }

    #[test]
    fn counts_survive_and_sum_to_len() {
        let c = kmeans_coreset(&wave(60), 12, 4).unwrap();
        let e = encode_cluster(&c).unwrap();
        assert!(e.warnings.is_empty());
        let d = decode_cluster(&e.bytes, 12, 1, 60, &[unit()]).unwrap();
        assert_eq!(d.counts_sum(0), 60);
    }

    #[test]
    fn oversized_cluster_clamps_with_warning() {
        let mut v = vec![0.0; 30];
        v.extend(vec![1.0; 30]);
        let w = SensorWindow::from_channels(&[v], vec![unit()]).unwrap();
        let c = kmeans_coreset(&w, 2, 4).unwrap();
        let e = encode_cluster(&c).unwrap();
        assert_eq!(e.warnings.len(), 2);
        let d = decode_cluster(&e.bytes, 2, 1, 60, &[unit()]).unwrap();
        assert!(d.channels[0].iter().all(|cl| cl.count == 16));
    }

    #[test]
    fn truncated_bodies_are_rejected() {
        let c = kmeans_coreset(&wave(60), 12, 4).unwrap();
        let e = encode_cluster(&c).unwrap();
        assert!(matches!(decode_cluster(&e.bytes[..41], 12, 1, 60, &[unit()]), Err(Error::Format(_))));
        let s = sample_coreset(&wave(60), SampleParams::default(), 3).unwrap();
        let e = encode_sample(&s).unwrap();
        assert_eq!(e.bytes.len(), 44);
        assert!(matches!(decode_sample(&e.bytes[..40], 20, 1, 60, &[unit()]), Err(Error::Format(_))));
    }

    #[test]
    fn oversize_formats_rejected() {
        let w = wave(65);
        let c = kmeans_coreset(&w, 3, 4).unwrap();
        assert!(encode_cluster(&c).is_err());
        let c = kmeans_coreset(&wave(64), 64, 1).unwrap();
        assert!(encode_cluster(&c).is_err());
    }

    #[test]
    fn full_window_sample_round_trip() {
        let w = wave(60);
        let params = SampleParams { m: 60, min_gap: 1, max_rounds: 7 };
        let s = sample_coreset(&w, params, 0).unwrap();
        let d = decode_sample(&encode_sample(&s).unwrap().bytes, 60, 1, 60, &[unit()]).unwrap();
        for (a, b) in s.channels[0].points.iter().zip(&d.channels[0].points) {
            assert_eq!(a.index, b.index);
            assert!((a.value - b.value).abs() <= 1.0 / 1023.0);
        }
    }

    fn arb_cluster_coreset() -> impl Strategy<Value = ClusterCoreset> {
        (1usize..=64, 1usize..=3, 1usize..=12).prop_flat_map(|(len, channels, k)| {
            let k = k.min(len);
            let cluster = (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.5, 1usize..=16)
                .prop_map(|(center_t, center_v, radius, count)| Cluster { center_t, center_v, radius, count });
            (
                prop::collection::vec(prop::collection::vec(cluster, k), channels),
                prop::collection::vec((-5.0f64..0.0, 0.1f64..5.0), channels),
            )
                .prop_map(move |(chs, ranges)| ClusterCoreset {
                    channels: chs,
                    len,
                    quant_meta: ranges.into_iter().map(|(lo, span)| ChannelRange::new(lo, lo + span).unwrap()).collect(),
                })
        })
    }

    fn arb_sample_coreset() -> impl Strategy<Value = SampleCoreset> {
        (2usize..=64, 1usize..=3).prop_flat_map(|(len, channels)| {
            let m = (len / 2).max(1);
            let chan = (prop::sample::subsequence((0..len).collect::<Vec<_>>(), m), prop::collection::vec(0.0f64..=1.0, m), 0.0f64..=1.0, 0.0f64..=0.25);
            (prop::collection::vec(chan, channels), prop::collection::vec((-5.0f64..0.0, 0.1f64..5.0), channels)).prop_map(move |(chs, ranges)| {
                let quant_meta: Vec<ChannelRange> = ranges.into_iter().map(|(lo, span)| ChannelRange::new(lo, lo + span).unwrap()).collect();
                SampleCoreset {
                    channels: chs
                        .into_iter()
                        .zip(&quant_meta)
                        .map(|((idx, vals, mean, var), r)| SampleChannel {
                            points: idx.into_iter().zip(vals).map(|(index, u)| SamplePoint { index, value: r.denormalize(u) }).collect(),
                            mean: r.denormalize(mean),
                            variance: var * r.span().powi(2),
                        })
                        .collect(),
                    len,
                    quant_meta,
                }
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn cluster_round_trip_within_quantization(c in arb_cluster_coreset()) {
            let e = encode_cluster(&c).unwrap();
            let k = c.k_per_channel();
            prop_assert_eq!(e.bytes.len(), cluster_body_len(k, c.channels.len(), ClusterLayout::Recoverable));
            let d = decode_cluster(&e.bytes, k, c.channels.len(), c.len, &c.quant_meta).unwrap();
            let scale = t_scale(c.len);
            for (a, b) in c.channels.iter().flatten().zip(d.channels.iter().flatten()) {
                prop_assert_eq!(b.center_t, (a.center_t * scale).round() / scale);
                prop_assert!((a.center_v - b.center_v).abs() <= 1.0 / 1023.0);
                prop_assert!((a.radius.min(1.0) - b.radius).abs() <= 1.0 / 255.0);
                prop_assert_eq!(a.count, b.count);
            }
        }

        #[test]
        fn sample_round_trip_within_quantization(s in arb_sample_coreset()) {
            let e = encode_sample(&s).unwrap();
            let m = s.samples_per_channel();
            let d = decode_sample(&e.bytes, m, s.channels.len(), s.len, &s.quant_meta).unwrap();
            for ((a, b), r) in s.channels.iter().zip(&d.channels).zip(&s.quant_meta) {
                for (p, q) in a.points.iter().zip(&b.points) {
                    prop_assert_eq!(p.index, q.index);
                    prop_assert!((p.value - q.value).abs() <= r.span() / 1023.0);
                }
                prop_assert!((a.mean - b.mean).abs() <= r.span() / 65535.0);
                prop_assert!((a.variance - b.variance).abs() <= r.span().powi(2) / 65535.0);
            }
        }
    }
}
