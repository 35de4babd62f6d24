//! Host-side reconstruction of full-length windows from coresets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coreset::{ClusterCoreset, SampleCoreset};
use crate::dataio::SensorWindow;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReconstruction {
    pub window: SensorWindow,
    /// Redistributed points per channel in the normalized (t, v) plane,
    /// before grid resampling. Each entry is `(cluster index, [t, v])`.
    pub points: Vec<Vec<(usize, [f64; 2])>>,
    /// Set when the transmitted counts did not sum to the window length and
    /// were rescaled proportionally.
    pub counts_rescaled: bool,
}

/// Largest-remainder rescaling of `counts` to sum exactly to `total`.
/// All-zero counts become an even split.
fn rescale_counts(counts: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = counts.iter().sum();
    let n = counts.len();
    let shares: Vec<f64> = if sum == 0 {
        vec![total as f64 / n as f64; n]
    } else {
        counts.iter().map(|&c| c as f64 * total as f64 / sum as f64).collect()
    };
    let mut out: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(a.cmp(&b)));
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// Redistributes each cluster's points uniformly over its disk, then lays
/// them onto the uniform time grid in time order: with exactly L points, the
/// i-th earliest point fills slot i.
pub fn reconstruct_cluster(c: &ClusterCoreset, len: usize, seed: u64) -> Result<ClusterReconstruction> {
    if len == 0 {
        return Err(Error::config("cannot reconstruct an empty window"));
    }
    if c.quant_meta.len() != c.channels.len() {
        return Err(Error::format("quant_meta does not match channel count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rescaled = false;
    let mut columns = Vec::with_capacity(c.channels.len());
    let mut all_points = Vec::with_capacity(c.channels.len());

    for (clusters, range) in c.channels.iter().zip(&c.quant_meta) {
        if clusters.is_empty() {
            return Err(Error::format("channel without clusters"));
        }
        let raw: Vec<usize> = clusters.iter().map(|cl| cl.count).collect();
        let counts = if raw.iter().sum::<usize>() == len {
            raw
        } else {
            rescaled = true;
            rescale_counts(&raw, len)
        };

        let mut pts: Vec<(usize, [f64; 2])> = Vec::with_capacity(len);
        for (j, (cl, &n)) in clusters.iter().zip(&counts).enumerate() {
            for _ in 0..n {
                let rho = cl.radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                let t = (cl.center_t + rho * theta.cos()).clamp(0.0, 1.0);
                let v = (cl.center_v + rho * theta.sin()).clamp(0.0, 1.0);
                pts.push((j, [t, v]));
            }
        }
        pts.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]).then(a.1[1].total_cmp(&b.1[1])));

        let column: Vec<f64> = pts.iter().map(|p| range.denormalize(p.1[1])).collect();
        columns.push(column);
        all_points.push(pts);
    }

    let window = SensorWindow::from_channels(&columns, c.quant_meta.clone())?;
    Ok(ClusterReconstruction {
        window,
        points: all_points,
        counts_rescaled: rescaled,
    })
}

/// Synthesizes a full window from a sampling coreset.
pub trait Generator {
    fn generate(&self, s: &SampleCoreset, len: usize, seed: u64) -> Result<SensorWindow>;
}

/// Linear interpolation between kept samples plus Gaussian noise on the
/// missing ones, scaled in closed form so the window's variance equals the
/// transmitted one; the result is then shifted onto the transmitted mean.
#[derive(Clone, Copy, Debug, Default)]
pub struct MomentMatching;

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (mean, x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

impl Generator for MomentMatching {
    fn generate(&self, s: &SampleCoreset, len: usize, seed: u64) -> Result<SensorWindow> {
        if s.quant_meta.len() != s.channels.len() {
            return Err(Error::format("quant_meta does not match channel count"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut columns = Vec::with_capacity(s.channels.len());
        for ch in &s.channels {
            let pts = &ch.points;
            if pts.is_empty() || pts.iter().any(|p| p.index >= len) {
                return Err(Error::format("sample coreset does not fit the target length"));
            }
            if ch.variance <= 0.0 {
                columns.push(vec![ch.mean; len]);
                continue;
            }

            let mut y = vec![0.0; len];
            let mut kept = vec![false; len];
            for p in pts {
                y[p.index] = p.value;
                kept[p.index] = true;
            }
            for i in 0..pts[0].index {
                y[i] = pts[0].value;
            }
            for pair in pts.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let span = (b.index - a.index) as f64;
                for i in a.index + 1..b.index {
                    let f = (i - a.index) as f64 / span;
                    y[i] = a.value + f * (b.value - a.value);
                }
            }
            let last = pts[pts.len() - 1];
            for v in y.iter_mut().skip(last.index + 1) {
                *v = last.value;
            }

            let missing = kept.iter().filter(|&&k| !k).count();
            let noise: Vec<f64> = kept
                .iter()
                .map(|&k| if k { 0.0 } else { rng.sample(StandardNormal) })
                .collect();
            let (y_mean, y_var) = moments(&y);
            let mut z = if missing == 0 {
                y
            } else if ch.variance > y_var {
                let (n_mean, n_var) = moments(&noise);
                let cov = y.iter().zip(&noise).map(|(a, b)| (a - y_mean) * (b - n_mean)).sum::<f64>() / len as f64;
                if n_var > 0.0 {
                    let scale = (-cov + (cov * cov + n_var * (ch.variance - y_var)).sqrt()) / n_var;
                    y.iter().zip(&noise).map(|(a, b)| a + scale * b).collect()
                } else {
                    y
                }
            } else {
                let shrink = (ch.variance / y_var).sqrt();
                y.iter().map(|a| y_mean + (a - y_mean) * shrink).collect()
            };
            let (z_mean, _) = moments(&z);
            for v in &mut z {
                *v += ch.mean - z_mean;
            }
            columns.push(z);
        }
        SensorWindow::from_channels(&columns, s.quant_meta.clone())
    }
}

pub fn reconstruct_sample(s: &SampleCoreset, len: usize, seed: u64) -> Result<SensorWindow> {
    MomentMatching.generate(s, len, seed)
}
