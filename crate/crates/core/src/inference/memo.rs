use serde::{Deserialize, Serialize};

use crate::dataio::{ClassId, SensorWindow};
use crate::error::{Error, Result};

/// One ground-truth window per class, indexed by class id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateBank {
    templates: Vec<SensorWindow>,
}

impl TemplateBank {
    pub fn new(templates: Vec<SensorWindow>) -> Result<Self> {
        let first = templates.first().ok_or_else(|| Error::config("template bank is empty"))?;
        let (len, ch) = (first.len(), first.channels());
        if templates.iter().any(|t| t.len() != len || t.channels() != ch) {
            return Err(Error::config("templates must share one shape"));
        }
        Ok(TemplateBank { templates })
    }

    /// Picks, for each class, the first labeled window of that class.
    pub fn from_windows(windows: &[SensorWindow], n_classes: usize) -> Result<Self> {
        let templates = (0..n_classes)
            .map(|c| {
                windows
                    .iter()
                    .find(|w| w.label == Some(c))
                    .cloned()
                    .ok_or_else(|| Error::config(format!("no window of class {c} for the template bank")))
            })
            .collect::<Result<Vec<_>>>()?;
        TemplateBank::new(templates)
    }

    pub fn templates(&self) -> &[SensorWindow] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

/// Pearson correlation of one channel. A constant side scores 1 when both
/// sides are constant and equal within one 10-bit quantization step of the
/// channel range, 0 otherwise.
fn channel_corr(a: &[f64], b: &[f64], step: f64) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        let both_flat = saa == 0.0 && sbb == 0.0;
        return if both_flat && (ma - mb).abs() <= step { 1.0 } else { 0.0 };
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Channel-averaged Pearson coefficient of `w` against `template`.
pub fn correlation(w: &SensorWindow, template: &SensorWindow) -> Result<f64> {
    if w.len() != template.len() || w.channels() != template.channels() {
        return Err(Error::Shape {
            expected: format!("{}x{}", template.len(), template.channels()),
            got: format!("{}x{}", w.len(), w.channels()),
        });
    }
    let c = w.channels();
    let total: f64 = (0..c)
        .map(|ch| channel_corr(&w.channel(ch), &template.channel(ch), w.ranges()[ch].span() / 1023.0))
        .sum();
    Ok(total / c as f64)
}

/// Best-matching class and its coefficient; ties go to the lowest class id.
pub fn correlate(w: &SensorWindow, bank: &TemplateBank) -> Result<(ClassId, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, t) in bank.templates.iter().enumerate() {
        let r = correlation(w, t)?;
        if r > best.1 {
            best = (c, r);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::ChannelRange;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn win(cols: &[Vec<f64>]) -> SensorWindow {
        SensorWindow::from_channels(cols, vec![ChannelRange::new(-100.0, 100.0).unwrap(); cols.len()]).unwrap()
    }

    fn wave(f: f64, ph: f64) -> Vec<f64> {
        (0..60).map(|i| (i as f64 * f + ph).sin()).collect()
    }

    #[test]
    fn self_and_negated() {
        let a = win(&[wave(0.3, 0.0), wave(0.5, 1.0)]);
        let neg = win(&[wave(0.3, 0.0).iter().map(|v| -v).collect(), wave(0.5, 1.0).iter().map(|v| -v).collect()]);
        assert!((correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlation(&neg, &a).unwrap() + 1.0).abs() < 1e-12);
        let bank = TemplateBank::new(vec![win(&[wave(0.9, 0.0), wave(0.1, 0.0)]), a.clone()]).unwrap();
        let (c, r) = correlate(&a, &bank).unwrap();
        assert_eq!(c, 1);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_channels() {
        let a = win(&[vec![2.0; 60]]);
        let b = win(&[vec![2.0; 60]]);
        let c = win(&[vec![3.0; 60]]);
        assert_eq!(correlation(&a, &b).unwrap(), 1.0);
        assert_eq!(correlation(&a, &c).unwrap(), 0.0);
        assert_eq!(correlation(&a, &win(&[wave(0.2, 0.0)])).unwrap(), 0.0);
    }

    #[test]
    fn invariant_to_positive_affine_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = win(&[wave(0.3, 0.2), wave(0.7, 0.0)]);
        let base: Vec<Vec<f64>> = (0..2).map(|_| (0..60).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let w = win(&base);
        let r0 = correlation(&w, &t).unwrap();
        for _ in 0..100 {
            let scaled: Vec<Vec<f64>> = base
                .iter()
                .map(|col| {
                    let (a, b) = (rng.random_range(0.1..5.0), rng.random_range(-10.0..10.0));
                    col.iter().map(|v| a * v + b).collect()
                })
                .collect();
            assert!((correlation(&win(&scaled), &t).unwrap() - r0).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_mismatch() {
        assert!(correlation(&win(&[vec![0.0; 60]]), &win(&[vec![0.0; 60], vec![0.0; 60]])).is_err());
    }
}
