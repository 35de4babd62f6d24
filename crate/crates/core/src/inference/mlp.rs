use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters for [`Mlp::fit`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.003,
            epochs: 40,
            hidden: 64,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Two-layer perceptron: `input -> ReLU(hidden) -> logits`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    /// `hidden x input_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `classes x hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros(m: &Mlp) -> Self {
        Gradients {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: vec![0.0; m.b2.len()],
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| rng.random_range(-a..a)).collect()
        };
        let w1 = init(input_dim, hidden);
        let w2 = init(hidden, classes);
        Mlp {
            input_dim,
            hidden,
            classes,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; classes],
        }
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
                self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn output(&self, act: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                self.b2[k] + row.iter().zip(act).map(|(w, a)| w * a).sum::<f64>()
            })
            .collect()
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let act: Vec<f64> = self.hidden_pre(x).into_iter().map(|v| v.max(0.0)).collect();
        self.output(&act)
    }

    pub fn predict(&self, x: &[f64]) -> (usize, f64) {
        let p = softmax(&self.logits(x));
        let c = argmax(&p);
        (c, p[c])
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[usize]) -> (f64, Gradients) {
        let mut g = Gradients::zeros(self);
        let mut loss = 0.0;
        let n = xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let pre = self.hidden_pre(x);
            let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
            let p = softmax(&self.output(&act));
            loss -= p[y].max(1e-300).ln();

            let mut d_act = vec![0.0; self.hidden];
            for k in 0..self.classes {
                let d = (p[k] - if k == y { 1.0 } else { 0.0 }) / n;
                g.b2[k] += d;
                let row = k * self.hidden;
                for h in 0..self.hidden {
                    g.w2[row + h] += d * act[h];
                    d_act[h] += d * self.w2[row + h];
                }
            }
            for h in 0..self.hidden {
                if pre[h] <= 0.0 {
                    continue;
                }
                let d = d_act[h];
                g.b1[h] += d;
                let row = h * self.input_dim;
                for (gw, v) in g.w1[row..row + self.input_dim].iter_mut().zip(x.iter()) {
                    *gw += d * v;
                }
            }
        }
        (loss / n, g)
    }

    pub fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Trains a fresh network with Adam on mini-batches of cross-entropy.
    pub fn fit(xs: &[Vec<f64>], ys: &[usize], classes: usize, cfg: &TrainConfig) -> Result<Mlp> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Training("training set is empty or mislabeled".into()));
        }
        let mut distinct: Vec<usize> = ys.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::Training("training set needs at least two classes".into()));
        }
        let dim = xs[0].len();
        if xs.iter().any(|x| x.len() != dim) {
            return Err(Error::Training("inconsistent feature dimension".into()));
        }
        let mut net = Mlp::new(dim, cfg.hidden, classes, cfg.seed);
        net.train_more(xs, ys, cfg)?;
        Ok(net)
    }

    /// Continues training from the current weights.
    pub fn train_more(&mut self, xs: &[Vec<f64>], ys: &[usize], cfg: &TrainConfig) -> Result<()> {
        if ys.iter().any(|&y| y >= self.classes) {
            return Err(Error::Training("label outside the output layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut adam = Adam::new(self, cfg.lr);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size.max(1)) {
                let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
                let by: Vec<usize> = batch.iter().map(|&i| ys[i]).collect();
                let (_, g) = self.loss_and_grad(&bx, &by);
                adam.step(self, &g);
            }
        }
        Ok(())
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        let hits = xs.iter().zip(ys).filter(|(x, &y)| self.predict(x).0 == y).count();
        hits as f64 / xs.len() as f64
    }
}

struct Adam {
    lr: f64,
    t: i32,
    m: [Vec<f64>; 4],
    v: [Vec<f64>; 4],
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(net: &Mlp, lr: f64) -> Self {
        let z = |n: usize| vec![0.0; n];
        let sizes = [net.w1.len(), net.b1.len(), net.w2.len(), net.b2.len()];
        Adam {
            lr,
            t: 0,
            m: sizes.map(z),
            v: sizes.map(z),
        }
    }

    fn step(&mut self, net: &mut Mlp, g: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let grads = [&g.w1, &g.b1, &g.w2, &g.b2];
        for (i, p) in net.params_mut().into_iter().enumerate() {
            for (j, w) in p.iter_mut().enumerate() {
                let gj = grads[i][j];
                self.m[i][j] = Self::B1 * self.m[i][j] + (1.0 - Self::B1) * gj;
                self.v[i][j] = Self::B2 * self.v[i][j] + (1.0 - Self::B2) * gj * gj;
                *w -= self.lr * (self.m[i][j] / c1) / ((self.v[i][j] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss(net: &Mlp, xs: &[&[f64]], ys: &[usize]) -> f64 {
        net.loss_and_grad(xs, ys).0
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5 {
            let net = Mlp::new(5, 4, 3, trial);
            let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let ys: Vec<usize> = (0..6).map(|i| i % 3).collect();
            let xr: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
            let (_, g) = net.loss_and_grad(&xr, &ys);
            let analytic = [g.w1, g.b1, g.w2, g.b2];
            let h = 1e-6;
            for p in 0..4 {
                for j in 0..analytic[p].len() {
                    let mut plus = net.clone();
                    plus.params_mut()[p][j] += h;
                    let mut minus = net.clone();
                    minus.params_mut()[p][j] -= h;
                    let numeric = (loss(&plus, &xr, &ys) - loss(&minus, &xr, &ys)) / (2.0 * h);
                    let a = analytic[p][j];
                    let denom = a.abs().max(numeric.abs()).max(1e-8);
                    assert!((a - numeric).abs() / denom < 1e-4 || (a - numeric).abs() < 1e-9, "param {p}/{j}: {a} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn separable_data_is_learned() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }, (i as f64 * 0.1).sin()]).collect();
        let ys: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let cfg = TrainConfig { epochs: 50, hidden: 8, ..Default::default() };
        let net = Mlp::fit(&xs, &ys, 2, &cfg).unwrap();
        assert_eq!(net.accuracy(&xs, &ys), 1.0);
        assert_eq!(net, Mlp::fit(&xs, &ys, 2, &cfg).unwrap());
    }

    #[test]
    fn single_class_is_rejected() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(Mlp::fit(&xs, &[0, 0], 2, &TrainConfig::default()).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -5.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
