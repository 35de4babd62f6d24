use serde::{Deserialize, Serialize};

use super::mlp::{argmax, softmax, Mlp, TrainConfig};
use crate::dataio::{ChannelRange, ClassId, SensorWindow};
use crate::error::{Error, Result};

/// Activations are requantized to this many signed bits between layers.
pub const ACTIVATION_BITS: u32 = 8;

/// Shape and normalization of the windows a model consumes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub len: usize,
    pub channels: usize,
    pub ranges: Vec<ChannelRange>,
}

impl InputSpec {
    pub fn of(w: &SensorWindow) -> Self {
        InputSpec {
            len: w.len(),
            channels: w.channels(),
            ranges: w.ranges().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.len * self.channels
    }

    /// Time-major values mapped to [-1, 1].
    pub fn encode(&self, w: &SensorWindow) -> Result<Vec<f64>> {
        if w.len() != self.len || w.channels() != self.channels {
            return Err(Error::Shape {
                expected: format!("{}x{}", self.len, self.channels),
                got: format!("{}x{}", w.len(), w.channels()),
            });
        }
        Ok(w
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| 2.0 * self.ranges[i % self.channels].normalize(v) - 1.0)
            .collect())
    }
}

/// Symmetric per-tensor quantization: `real = q * scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTensor {
    pub q: Vec<i32>,
    pub scale: f64,
}

fn qmax(bits: u32) -> i32 {
    (1 << (bits - 1)) - 1
}

impl QTensor {
    pub fn quantize(x: &[f64], bits: u32) -> Self {
        let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if max > 0.0 { max / qmax(bits) as f64 } else { 1.0 };
        let lim = qmax(bits);
        QTensor {
            q: x.iter().map(|v| ((v / scale).round() as i32).clamp(-lim, lim)).collect(),
            scale,
        }
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.q.iter().map(|&q| q as f64 * self.scale).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantWeights {
    pub w1: QTensor,
    pub b1: QTensor,
    pub w2: QTensor,
    pub b2: QTensor,
}

/// A classifier at 32-bit float or 16/12-bit integer precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantModel {
    pub bits: u32,
    pub input: InputSpec,
    /// Float weights; for quantized models these are the dequantized values.
    pub net: Mlp,
    pub quant: Option<QuantWeights>,
}

/// Labeled windows as normalized feature vectors.
pub fn encode_set(spec: &InputSpec, windows: &[SensorWindow]) -> Result<(Vec<Vec<f64>>, Vec<ClassId>)> {
    let mut xs = Vec::with_capacity(windows.len());
    let mut ys = Vec::with_capacity(windows.len());
    for w in windows {
        let y = w
            .label
            .ok_or_else(|| Error::Training(format!("window {} has no label", w.window_id)))?;
        xs.push(spec.encode(w)?);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Fits a full-precision classifier on labeled windows.
pub fn train(train_set: &[SensorWindow], cfg: &TrainConfig) -> Result<QuantModel> {
    let first = train_set
        .first()
        .ok_or_else(|| Error::Training("empty training set".into()))?;
    let input = InputSpec::of(first);
    let (xs, ys) = encode_set(&input, train_set)?;
    let classes = ys.iter().max().map_or(0, |m| m + 1);
    let net = Mlp::fit(&xs, &ys, classes, cfg)?;
    Ok(QuantModel {
        bits: 32,
        input,
        net,
        quant: None,
    })
}

/// Per-tensor symmetric post-training quantization of a 32-bit model.
pub fn quantize(m: &QuantModel, bits: u32) -> Result<QuantModel> {
    if m.bits != 32 {
        return Err(Error::config(format!("can only quantize a 32-bit model, got {}-bit", m.bits)));
    }
    if !(2..=16).contains(&bits) {
        return Err(Error::config(format!("unsupported bit width {bits}")));
    }
    // Worst-case first-layer accumulator must fit in an i32.
    let worst = m.net.input_dim.max(m.net.hidden) as i64 * qmax(bits) as i64 * qmax(ACTIVATION_BITS) as i64;
    if worst >= i32::MAX as i64 / 2 {
        return Err(Error::config(format!(
            "{bits}-bit weights over {} inputs overflow a 32-bit accumulator",
            m.net.input_dim
        )));
    }
    let quant = QuantWeights {
        w1: QTensor::quantize(&m.net.w1, bits),
        b1: QTensor::quantize(&m.net.b1, bits),
        w2: QTensor::quantize(&m.net.w2, bits),
        b2: QTensor::quantize(&m.net.b2, bits),
    };
    let mut net = m.net.clone();
    net.w1 = quant.w1.dequantize();
    net.b1 = quant.b1.dequantize();
    net.w2 = quant.w2.dequantize();
    net.b2 = quant.b2.dequantize();
    Ok(QuantModel {
        bits,
        input: m.input.clone(),
        net,
        quant: Some(quant),
    })
}

/// Quantizes, and if accuracy on `calib` drops by more than `max_drop`
/// fine-tunes the dequantized weights at full precision for `cfg.epochs`
/// and quantizes again, keeping whichever quantized model scores higher.
pub fn quantize_finetuned(
    m: &QuantModel,
    bits: u32,
    calib: &[SensorWindow],
    train_set: &[SensorWindow],
    cfg: &TrainConfig,
    max_drop: f64,
) -> Result<QuantModel> {
    let q = quantize(m, bits)?;
    let base = accuracy(m, calib)?;
    let acc_q = accuracy(&q, calib)?;
    if base - acc_q <= max_drop {
        return Ok(q);
    }
    let (xs, ys) = encode_set(&m.input, train_set)?;
    let mut tuned = m.clone();
    tuned.net = q.net.clone();
    tuned.net.train_more(&xs, &ys, cfg)?;
    let q2 = quantize(&tuned, bits)?;
    if accuracy(&q2, calib)? > acc_q {
        Ok(q2)
    } else {
        Ok(q)
    }
}

fn requantize(x: &[f64]) -> (Vec<i32>, f64) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lim = qmax(ACTIVATION_BITS);
    let scale = if max > 0.0 { max / lim as f64 } else { 1.0 };
    (x.iter().map(|v| ((v / scale).round() as i32).clamp(-lim, lim)).collect(), scale)
}

fn int_layer(w: &QTensor, b: &QTensor, rows: usize, cols: usize, x: &[i32], x_scale: f64) -> Vec<f64> {
    let acc_scale = w.scale * x_scale;
    (0..rows)
        .map(|r| {
            let row = &w.q[r * cols..(r + 1) * cols];
            let mut acc: i32 = row.iter().zip(x).fold(0i32, |a, (&wq, &xq)| a.saturating_add(wq.saturating_mul(xq)));
            let bias = (b.q[r] as f64 * b.scale / acc_scale).round();
            acc = acc.saturating_add(bias.clamp(i32::MIN as f64, i32::MAX as f64) as i32);
            acc as f64 * acc_scale
        })
        .collect()
}

impl QuantModel {
    pub fn n_classes(&self) -> usize {
        self.net.classes
    }

    /// Logits for one window: float forward pass at 32 bits, integer
    /// multiply-accumulate with 32-bit accumulators otherwise.
    pub fn logits(&self, w: &SensorWindow) -> Result<Vec<f64>> {
        let x = self.input.encode(w)?;
        Ok(match &self.quant {
            None => self.net.logits(&x),
            Some(q) => {
                let (xq, xs) = requantize(&x);
                let pre = int_layer(&q.w1, &q.b1, self.net.hidden, self.net.input_dim, &xq, xs);
                let act: Vec<f64> = pre.into_iter().map(|v| v.max(0.0)).collect();
                let (hq, hs) = requantize(&act);
                int_layer(&q.w2, &q.b2, self.net.classes, self.net.hidden, &hq, hs)
            }
        })
    }

    pub fn probabilities(&self, w: &SensorWindow) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(w)?))
    }
}

/// Predicted class and its softmax probability.
pub fn infer(m: &QuantModel, w: &SensorWindow) -> Result<(ClassId, f64)> {
    let p = m.probabilities(w)?;
    let c = argmax(&p);
    Ok((c, p[c]))
}

/// Fraction of labeled windows classified correctly.
pub fn accuracy(m: &QuantModel, windows: &[SensorWindow]) -> Result<f64> {
    if windows.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for w in windows {
        if Some(infer(m, w)?.0) == w.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / windows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{gen_synthetic, window_stream, SyntheticSpec};

    fn small_set(sigma: f64, seed: u64) -> Vec<SensorWindow> {
        let s = gen_synthetic(&SyntheticSpec::new(2, 10, 1, 60, sigma, seed)).unwrap();
        window_stream(&s, 60, 30).unwrap()
    }

    #[test]
    fn separable_training_reaches_full_accuracy() {
        let w = small_set(0.0, 7);
        let m = train(&w, &TrainConfig { epochs: 50, ..Default::default() }).unwrap();
        assert_eq!(accuracy(&m, &w).unwrap(), 1.0);
        for win in &w {
            assert_eq!(Some(infer(&m, win).unwrap().0), win.label);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let w = small_set(0.1, 3);
        let cfg = TrainConfig { epochs: 5, ..Default::default() };
        assert_eq!(train(&w, &cfg).unwrap(), train(&w, &cfg).unwrap());
    }

    #[test]
    fn single_class_set_is_rejected() {
        let w: Vec<SensorWindow> = small_set(0.0, 1).into_iter().filter(|w| w.label == Some(0)).collect();
        assert!(matches!(train(&w, &TrainConfig::default()), Err(Error::Training(_))));
    }

    #[test]
    fn quantization_error_is_half_a_step() {
        let w = small_set(0.1, 5);
        let m = train(&w, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
        for bits in [16, 12] {
            let q = quantize(&m, bits).unwrap();
            let qw = q.quant.as_ref().unwrap();
            for (orig, t) in [(&m.net.w1, &qw.w1), (&m.net.b1, &qw.b1), (&m.net.w2, &qw.w2), (&m.net.b2, &qw.b2)] {
                for (a, b) in orig.iter().zip(t.dequantize()) {
                    assert!((a - b).abs() <= t.scale / 2.0 + 1e-15);
                }
                assert!(t.scale > 0.0);
                assert!(t.q.iter().all(|&v| v.abs() <= qmax(bits)));
            }
        }
        assert!(quantize(&quantize(&m, 16).unwrap(), 12).is_err());
    }

    #[test]
    fn confidences_are_probabilities() {
        let w = small_set(0.1, 9);
        let m = train(&w, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
        let q = quantize(&m, 12).unwrap();
        for win in &w {
            for model in [&m, &q] {
                let p = model.probabilities(win).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                let (_, conf) = infer(model, win).unwrap();
                assert!((0.0..=1.0).contains(&conf));
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let w = small_set(0.0, 2);
        let m = train(&w, &TrainConfig { epochs: 1, ..Default::default() }).unwrap();
        let other = SensorWindow::from_channels(&[vec![0.0; 30]], w[0].ranges().to_vec()).unwrap();
        assert!(matches!(infer(&m, &other), Err(Error::Shape { .. })));
    }
}
