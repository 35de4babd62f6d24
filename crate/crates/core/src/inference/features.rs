//! Fixed-length feature vectors built straight from decoded coresets, for
//! classifiers that skip host-side reconstruction.

use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, TrainConfig};
use crate::coreset::{ClusterCoreset, SampleCoreset};
use crate::dataio::ClassId;
use crate::error::{Error, Result};

/// Per channel, `k_max` slots of `(t, v, radius, count / 16)` with t and v
/// mapped to [-1, 1]; unused slots are zero.
pub fn cluster_features(c: &ClusterCoreset, k_max: usize) -> Result<Vec<f64>> {
    if c.k_per_channel() > k_max {
        return Err(Error::Shape {
            expected: format!("at most {k_max} clusters"),
            got: c.k_per_channel().to_string(),
        });
    }
    let mut out = Vec::with_capacity(c.channels.len() * k_max * 4);
    for clusters in &c.channels {
        for cl in clusters {
            out.extend([2.0 * cl.center_t - 1.0, 2.0 * cl.center_v - 1.0, cl.radius, cl.count as f64 / 16.0]);
        }
        out.resize(out.len() + (k_max - clusters.len()) * 4, 0.0);
    }
    Ok(out)
}

/// Per channel, each point as `(position, value)` in [-1, 1], then the mean
/// and a span-normalized variance.
pub fn sample_features(s: &SampleCoreset) -> Vec<f64> {
    let t_scale = s.len.saturating_sub(1).max(1) as f64;
    let mut out = Vec::new();
    for (ch, range) in s.channels.iter().zip(&s.quant_meta) {
        for p in &ch.points {
            out.push(2.0 * p.index as f64 / t_scale - 1.0);
            out.push(2.0 * range.normalize(p.value) - 1.0);
        }
        out.push(2.0 * range.normalize(ch.mean) - 1.0);
        out.push(4.0 * ch.variance / (range.span() * range.span()));
    }
    out
}

/// Classifier over coreset feature vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectModel {
    pub net: Mlp,
}

impl DirectModel {
    pub fn fit(xs: &[Vec<f64>], ys: &[ClassId], classes: usize, cfg: &TrainConfig) -> Result<Self> {
        Ok(DirectModel {
            net: Mlp::fit(xs, ys, classes, cfg)?,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<(ClassId, f64)> {
        if x.len() != self.net.input_dim {
            return Err(Error::Shape {
                expected: self.net.input_dim.to_string(),
                got: x.len().to_string(),
            });
        }
        Ok(self.net.predict(x))
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[ClassId]) -> f64 {
        self.net.accuracy(xs, ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coreset::{kmeans_coreset, sample_coreset, SampleParams};
    use crate::dataio::{gen_synthetic, window_stream, SyntheticSpec};

    #[test]
    fn feature_lengths_are_fixed() {
        let s = gen_synthetic(&SyntheticSpec::new(2, 3, 2, 60, 0.1, 4)).unwrap();
        let w = window_stream(&s, 60, 30).unwrap();
        for k in [3, 12] {
            let c = kmeans_coreset(&w[0], k, 4).unwrap();
            assert_eq!(cluster_features(&c, 12).unwrap().len(), 2 * 12 * 4);
        }
        let c = kmeans_coreset(&w[0], 12, 4).unwrap();
        assert!(cluster_features(&c, 8).is_err());
        let sc = sample_coreset(&w[0], SampleParams::default(), 1).unwrap();
        let f = sample_features(&sc);
        assert_eq!(f.len(), 2 * (20 * 2 + 2));
        assert!(f.iter().all(|v| v.is_finite() && v.abs() <= 4.0));
    }
}
