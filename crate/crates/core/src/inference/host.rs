//! Host-side models and the compress / transmit / reconstruct round trip.

use serde::{Deserialize, Serialize};

use super::mlp::TrainConfig;
use super::mlp::argmax;
use super::quant::{infer, train, QuantModel};
use crate::coreset::{
    decode_cluster, decode_sample, encode_cluster, encode_sample, kmeans_coreset, sample_coreset, ClusterCoreset,
    SampleCoreset, SampleParams, ClusterBudgetTable, DEFAULT_MAX_ITER,
};
use crate::dataio::{ClassId, SensorWindow};
use crate::error::{Error, Result};
use crate::recovery::{reconstruct_cluster, reconstruct_sample};

/// Cluster coreset as the host sees it after the wire: encoded, then decoded.
pub fn cluster_roundtrip(w: &SensorWindow, k: usize) -> Result<(Vec<u8>, ClusterCoreset)> {
    let c = kmeans_coreset(w, k, DEFAULT_MAX_ITER)?;
    let bytes = encode_cluster(&c)?.bytes;
    let decoded = decode_cluster(&bytes, k, w.channels(), w.len(), w.ranges())?;
    Ok((bytes, decoded))
}

pub fn sample_roundtrip(w: &SensorWindow, params: SampleParams, seed: u64) -> Result<(Vec<u8>, SampleCoreset)> {
    let s = sample_coreset(w, params, seed)?;
    let bytes = encode_sample(&s)?.bytes;
    let decoded = decode_sample(&bytes, params.m, w.channels(), w.len(), w.ranges())?;
    Ok((bytes, decoded))
}

/// Window rebuilt from a cluster payload, carrying over `w`'s metadata.
pub fn via_cluster(w: &SensorWindow, k: usize, seed: u64) -> Result<SensorWindow> {
    let (_, c) = cluster_roundtrip(w, k)?;
    let r = reconstruct_cluster(&c, w.len(), seed)?;
    Ok(r.window.with_meta(w.label, w.window_id, w.t0))
}

pub fn via_sample(w: &SensorWindow, params: SampleParams, seed: u64) -> Result<SensorWindow> {
    let (_, s) = sample_roundtrip(w, params, seed)?;
    Ok(reconstruct_sample(&s, w.len(), seed)?.with_meta(w.label, w.window_id, w.t0))
}

/// Host classifiers: one for raw windows and one per reconstruction path.
///
/// Reconstruction is randomized, so the host draws `draws` reconstructions
/// per payload: the coreset heads are trained on that many draws of every
/// training window, and at inference their probabilities are averaged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostModels {
    pub full: QuantModel,
    pub d3: QuantModel,
    pub d4: QuantModel,
    pub draws: usize,
    pub sample: SampleParams,
}

fn draw_seed(seed: u64, i: usize, draw: usize) -> u64 {
    seed.wrapping_mul(0x1000_0001)
        .wrapping_add((i as u64) << 8)
        .wrapping_add(draw as u64)
}

impl HostModels {
    /// Trains the raw-input model plus heads on windows reconstructed from
    /// k-cluster and sample payloads of the same training set.
    pub fn train(
        train_set: &[SensorWindow],
        cfg: &TrainConfig,
        k: usize,
        sample: SampleParams,
        draws: usize,
    ) -> Result<Self> {
        if draws == 0 {
            return Err(Error::config("host reconstruction draws must be at least 1"));
        }
        let full = train(train_set, cfg)?;
        let mut rc = Vec::with_capacity(train_set.len() * draws);
        let mut rs = Vec::with_capacity(train_set.len() * draws);
        for d in 0..draws {
            let (c, s) = reconstructed_sets(train_set, k, sample, cfg.seed.wrapping_add(d as u64 * 0x5851_f42d))?;
            rc.extend(c);
            rs.extend(s);
        }
        Ok(HostModels {
            full,
            d3: train(&rc, cfg)?,
            d4: train(&rs, cfg)?,
            draws,
            sample,
        })
    }

    pub fn classify_raw(&self, w: &SensorWindow) -> Result<(ClassId, f64)> {
        infer(&self.full, w)
    }

    pub fn classify_cluster(&self, c: &ClusterCoreset, seed: u64) -> Result<(ClassId, f64)> {
        self.averaged(&self.d3, |d| Ok(reconstruct_cluster(c, c.len, draw_seed(seed, 0, d))?.window))
    }

    pub fn classify_sample(&self, s: &SampleCoreset, seed: u64) -> Result<(ClassId, f64)> {
        self.averaged(&self.d4, |d| reconstruct_sample(s, s.len, draw_seed(seed, 0, d)))
    }

    fn averaged(&self, m: &QuantModel, mut draw: impl FnMut(usize) -> Result<SensorWindow>) -> Result<(ClassId, f64)> {
        let mut p = vec![0.0; m.n_classes()];
        for d in 0..self.draws {
            for (acc, v) in p.iter_mut().zip(m.probabilities(&draw(d)?)?) {
                *acc += v / self.draws as f64;
            }
        }
        let c = argmax(&p);
        Ok((c, p[c]))
    }
}

/// Smallest k per class whose host accuracy on that class's windows stays
/// within `tolerance` of the accuracy at `k_max`.
pub fn calibrate_cluster_budget(
    host: &HostModels,
    windows: &[SensorWindow],
    k_max: usize,
    tolerance: f64,
    seed: u64,
) -> Result<ClusterBudgetTable> {
    let mut table = ClusterBudgetTable::new(k_max);
    let classes = host.full.n_classes();
    for class in 0..classes {
        let members: Vec<&SensorWindow> = windows.iter().filter(|w| w.label == Some(class)).collect();
        if members.is_empty() {
            continue;
        }
        let mut acc = vec![0.0; k_max + 1];
        for k in 1..=k_max {
            let mut hits = 0;
            for (i, w) in members.iter().enumerate() {
                let (_, c) = cluster_roundtrip(w, k)?;
                if host.classify_cluster(&c, draw_seed(seed, i, k))?.0 == class {
                    hits += 1;
                }
            }
            acc[k] = hits as f64 / members.len() as f64;
        }
        let k = (1..=k_max).find(|&k| acc[k] >= acc[k_max] - tolerance).unwrap_or(k_max);
        table.set(class, k)?;
    }
    Ok(table)
}

/// Cluster- and sample-reconstructed copies of `windows`, seeded per window.
pub fn reconstructed_sets(
    windows: &[SensorWindow],
    k: usize,
    params: SampleParams,
    seed: u64,
) -> Result<(Vec<SensorWindow>, Vec<SensorWindow>)> {
    let mut rc = Vec::with_capacity(windows.len());
    let mut rs = Vec::with_capacity(windows.len());
    for (i, w) in windows.iter().enumerate() {
        let s = draw_seed(seed, i, 0);
        rc.push(via_cluster(w, k, s)?);
        rs.push(via_sample(w, params, s)?);
    }
    Ok((rc, rs))
}
