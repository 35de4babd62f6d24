use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SampleChannel, SampleCoreset, SamplePoint};
use crate::dataio::SensorWindow;
use crate::error::{Error, Result};

/// Per-timestep importance of one channel of a window. Implementations must
/// return non-negative weights that sum to 1.
pub trait ImportanceWeight {
    fn weights(&self, values: &[f64]) -> Vec<f64>;
}

/// `w_i ∝ eps + |x_i - mean| + |x_i - x_{i-1}|`, with `x_{-1} = x_0`.
#[derive(Clone, Copy, Debug)]
pub struct DeviationPlusDifference {
    pub eps: f64,
}

impl Default for DeviationPlusDifference {
    fn default() -> Self {
        DeviationPlusDifference { eps: 1e-6 }
    }
}

impl ImportanceWeight for DeviationPlusDifference {
    fn weights(&self, values: &[f64]) -> Vec<f64> {
        if values.is_empty() {
            return Vec::new();
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let raw: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let prev = if i == 0 { x } else { values[i - 1] };
                self.eps + (x - mean).abs() + (x - prev).abs()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

pub fn importance_weights(window: &SensorWindow, channel: usize) -> Result<Vec<f64>> {
    importance_weights_with(&DeviationPlusDifference::default(), window, channel)
}

pub fn importance_weights_with(
    weight: &impl ImportanceWeight,
    window: &SensorWindow,
    channel: usize,
) -> Result<Vec<f64>> {
    if channel >= window.channels() {
        return Err(Error::config(format!(
            "channel {channel} out of range for a {}-channel window",
            window.channels()
        )));
    }
    Ok(weight.weights(&window.channel(channel)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleParams {
    pub m: usize,
    pub min_gap: usize,
    pub max_rounds: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            m: 20,
            min_gap: 2,
            max_rounds: 7,
        }
    }
}

impl SampleParams {
    fn check(&self, len: usize) -> Result<()> {
        if self.m == 0 || self.min_gap == 0 {
            return Err(Error::config("sample count and min_gap must be positive"));
        }
        // m points with pairwise spacing min_gap need (m - 1) * min_gap + 1 slots.
        if (self.m - 1) * self.min_gap + 1 > len {
            return Err(Error::config(format!(
                "cannot place {} samples {} apart in a window of {len}",
                self.m, self.min_gap
            )));
        }
        Ok(())
    }
}

/// Importance-sampling coreset of every channel of `window`.
///
/// Indices are drawn without replacement in proportion to their weight. A
/// pass over the sorted draw removes every index closer than `min_gap` to the
/// previously kept one and redraws it; after `max_rounds` passes any leftover
/// conflict is settled deterministically in favour of the heavier points.
/// Moments describe the full window, not the sample.
pub fn sample_coreset(window: &SensorWindow, params: SampleParams, seed: u64) -> Result<SampleCoreset> {
    params.check(window.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weigher = DeviationPlusDifference::default();
    let channels = (0..window.channels())
        .map(|c| {
            let values = window.channel(c);
            let weights = weigher.weights(&values);
            let idx = select_indices(&weights, params, &mut rng);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            SampleChannel {
                points: idx
                    .into_iter()
                    .map(|index| SamplePoint {
                        index,
                        value: values[index],
                    })
                    .collect(),
                mean,
                variance,
            }
        })
        .collect();
    Ok(SampleCoreset {
        channels,
        len: window.len(),
        quant_meta: window.ranges().to_vec(),
    })
}

fn draw(weights: &[f64], taken: &[bool], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights
        .iter()
        .zip(taken)
        .filter(|(_, &t)| !t)
        .map(|(w, _)| w)
        .sum();
    let mut target = rng.random::<f64>() * total;
    let mut last = None;
    for (i, (&w, &t)) in weights.iter().zip(taken).enumerate() {
        if t {
            continue;
        }
        last = Some(i);
        if target < w {
            return i;
        }
        target -= w;
    }
    last.expect("at least one index left to draw")
}

fn select_indices(weights: &[f64], params: SampleParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let len = weights.len();
    let mut taken = vec![false; len];
    for _ in 0..params.m {
        let i = draw(weights, &taken, rng);
        taken[i] = true;
    }

    for _ in 0..params.max_rounds {
        let mut last_kept: Option<usize> = None;
        let mut evicted = Vec::new();
        for i in (0..len).filter(|&i| taken[i]) {
            match last_kept {
                Some(k) if i - k < params.min_gap => evicted.push(i),
                _ => last_kept = Some(i),
            }
        }
        if evicted.is_empty() {
            break;
        }
        for &i in &evicted {
            taken[i] = false;
        }
        for _ in &evicted {
            let i = draw(weights, &taken, rng);
            taken[i] = true;
        }
    }

    let selected: Vec<usize> = (0..len).filter(|&i| taken[i]).collect();
    if spaced(&selected, params.min_gap) {
        return selected;
    }
    greedy_resolve(weights, &selected, params).unwrap_or_else(|| best_spaced(weights, params))
}

fn spaced(sorted: &[usize], min_gap: usize) -> bool {
    sorted.windows(2).all(|p| p[1] - p[0] >= min_gap)
}

fn by_weight_desc(weights: &[f64], idx: &mut [usize]) {
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
}

/// Keeps the heaviest mutually compatible drawn points, then tops up with the
/// heaviest compatible undrawn ones. `None` if that greedy fill falls short.
fn greedy_resolve(weights: &[f64], selected: &[usize], params: SampleParams) -> Option<Vec<usize>> {
    let compatible = |kept: &[usize], i: usize| kept.iter().all(|&k| k.abs_diff(i) >= params.min_gap);
    let mut order = selected.to_vec();
    by_weight_desc(weights, &mut order);
    let mut kept: Vec<usize> = Vec::with_capacity(params.m);
    for i in order {
        if compatible(&kept, i) {
            kept.push(i);
        }
    }
    let mut rest: Vec<usize> = (0..weights.len()).filter(|i| !kept.contains(i)).collect();
    by_weight_desc(weights, &mut rest);
    for i in rest {
        if kept.len() == params.m {
            break;
        }
        if compatible(&kept, i) {
            kept.push(i);
        }
    }
    if kept.len() < params.m {
        return None;
    }
    kept.sort_unstable();
    Some(kept)
}

/// Maximum-total-weight index set of size m with spacing >= min_gap.
fn best_spaced(weights: &[f64], params: SampleParams) -> Vec<usize> {
    let len = weights.len();
    let (m, gap) = (params.m, params.min_gap);
    // best[i][j]: best weight using j points from indices >= i.
    let mut best = vec![vec![f64::NEG_INFINITY; m + 1]; len + gap + 1];
    for row in &mut best {
        row[0] = 0.0;
    }
    for i in (0..len).rev() {
        for j in 1..=m {
            let skip = best[i + 1][j];
            let take = weights[i] + best[i + gap][j - 1];
            best[i][j] = skip.max(take);
        }
    }
    let mut out = Vec::with_capacity(m);
    let (mut i, mut j) = (0, m);
    while j > 0 {
        let take = weights[i] + best[i + gap][j - 1];
        if take >= best[i + 1][j] {
            out.push(i);
            i += gap;
            j -= 1;
        } else {
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::ChannelRange;

    fn window(values: Vec<f64>) -> SensorWindow {
        SensorWindow::from_channels(&[values], vec![ChannelRange::new(-10.0, 10.0).unwrap()]).unwrap()
    }

    #[test]
    fn constant_window_has_uniform_weights() {
        let w = importance_weights(&window(vec![3.0; 60]), 0).unwrap();
        for x in w {
            assert!((x - 1.0 / 60.0).abs() < 1e-15);
        }
    }

    #[test]
    fn spike_dominates_weights() {
        let mut v = vec![1.0; 60];
        v[5] = 8.0;
        let w = importance_weights(&window(v), 0).unwrap();
        let argmax = (0..60).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert!(argmax == 5 || argmax == 6, "argmax {argmax}");
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_sampling_when_m_equals_len() {
        let v: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).sin()).collect();
        let params = SampleParams { m: 60, min_gap: 1, max_rounds: 7 };
        let s = sample_coreset(&window(v.clone()), params, 1).unwrap();
        let ch = &s.channels[0];
        assert_eq!(ch.points.iter().map(|p| p.index).collect::<Vec<_>>(), (0..60).collect::<Vec<_>>());
        let mean = v.iter().sum::<f64>() / 60.0;
        assert!((ch.mean - mean).abs() < 1e-12);
    }

    #[test]
    fn constant_window_moments() {
        let s = sample_coreset(&window(vec![2.5; 60]), SampleParams::default(), 9).unwrap();
        let ch = &s.channels[0];
        assert_eq!(ch.points.len(), 20);
        assert_eq!(ch.mean, 2.5);
        assert_eq!(ch.variance, 0.0);
        assert!(spaced(&ch.points.iter().map(|p| p.index).collect::<Vec<_>>(), 2));
    }

    #[test]
    fn infeasible_spacing_is_config_error() {
        let params = SampleParams { m: 31, min_gap: 2, max_rounds: 7 };
        assert!(sample_coreset(&window(vec![0.0; 60]), params, 0).is_err());
        let params = SampleParams { m: 30, min_gap: 2, max_rounds: 7 };
        assert!(sample_coreset(&window(vec![0.0; 60]), params, 0).is_ok());
    }

    #[test]
    fn tight_packing_falls_back_to_optimal_spacing() {
        let v: Vec<f64> = (0..60).map(|i| ((i * 7) % 11) as f64).collect();
        let params = SampleParams { m: 30, min_gap: 2, max_rounds: 0 };
        let s = sample_coreset(&window(v), params, 4).unwrap();
        let idx: Vec<usize> = s.channels[0].points.iter().map(|p| p.index).collect();
        assert_eq!(idx.len(), 30);
        assert!(spaced(&idx, 2));
    }

    #[test]
    fn best_spaced_matches_brute_force() {
        let weights = [0.3, 0.1, 0.25, 0.05, 0.2, 0.1];
        let params = SampleParams { m: 3, min_gap: 2, max_rounds: 0 };
        let got = best_spaced(&weights, params);
        let mut best = (f64::NEG_INFINITY, vec![]);
        for mask in 0u32..64 {
            let idx: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
            if idx.len() == 3 && spaced(&idx, 2) {
                let w: f64 = idx.iter().map(|&i| weights[i]).sum();
                if w > best.0 {
                    best = (w, idx);
                }
            }
        }
        assert_eq!(got, best.1);
    }
}
