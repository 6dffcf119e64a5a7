//! F0: one dense layer followed by softmax, trained by mini-batch SGD.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::RealDataset;
use super::decode::fit_decoder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    CrossEntropy,
    /// `Σ_{y'≠y} max(0, 1 + o_{y'} − o_y)`.
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `t = 0` and every power of two up to the last iteration.
    PowersOfTwo,
}

impl Schedule {
    pub fn iterations(self, total: usize) -> Vec<usize> {
        match self {
            Schedule::PowersOfTwo => {
                let mut v = vec![0];
                let mut t = 1;
                while t <= total {
                    v.push(t);
                    t *= 2;
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub loss: Loss,
    pub seed: u64,
    pub bias: bool,
    pub schedule: Schedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.002, batch: 128, epochs: 256, loss: Loss::CrossEntropy, seed: 0, bias: true, schedule: Schedule::PowersOfTwo }
    }
}

impl TrainConfig {
    pub fn total_iterations(&self, n: usize) -> usize {
        self.epochs * n.div_ceil(self.batch)
    }
}

/// Dense layer `o = W·x + b`, `W` row-major `classes × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct F0 {
    pub classes: usize,
    pub d: usize,
    pub w: Vec<f32>,
    pub b: Vec<f32>,
}

impl F0 {
    /// Weights from `N(0, 1/d)`, zero bias.
    pub fn init(classes: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, (1.0 / d as f32).sqrt()).unwrap();
        let w = (0..classes * d).map(|_| normal.sample(&mut rng)).collect();
        Self { classes, d, w, b: vec![0.0; classes] }
    }

    pub fn logits_into(&self, x: &[f32], out: &mut [f32]) {
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.w[c * self.d..(c + 1) * self.d];
            *o = self.b[c] + dot(row, x);
        }
    }

    /// Outputs for every sample, row-major `n × classes`.
    pub fn logits(&self, data: &RealDataset) -> Vec<f32> {
        let mut out = vec![0.0; data.n * self.classes];
        for i in 0..data.n {
            self.logits_into(data.row(i), &mut out[i * self.classes..(i + 1) * self.classes]);
        }
        out
    }

    pub fn accuracy(&self, data: &RealDataset) -> f64 {
        let o = self.logits(data);
        accuracy_of(&o, self.classes, &data.labels)
    }
}

pub(crate) fn accuracy_of(o: &[f32], classes: usize, labels: &[u8]) -> f64 {
    let hits = o
        .chunks_exact(classes)
        .zip(labels)
        .filter(|(row, &y)| argmax(row) == y as usize)
        .count();
    hits as f64 / labels.len().max(1) as f64
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    // fixed 8-lane accumulation: vectorizes and stays deterministic
    let mut acc = [0.0f32; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s: f32 = acc.iter().sum();
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}

pub(crate) fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Writes `∂L/∂o` for one sample into `o` (which holds the logits on entry).
pub(crate) fn output_grad(o: &mut [f32], y: usize, loss: Loss) {
    match loss {
        Loss::CrossEntropy => {
            let m = o.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            let mut s = 0.0;
            for v in o.iter_mut() {
                *v = (*v - m).exp();
                s += *v;
            }
            for v in o.iter_mut() {
                *v /= s;
            }
            o[y] -= 1.0;
        }
        Loss::Hinge => {
            let oy = o[y];
            let mut active = 0.0;
            for (c, v) in o.iter_mut().enumerate() {
                if c == y {
                    continue;
                }
                *v = if 1.0 + *v - oy > 0.0 { 1.0 } else { 0.0 };
                active += *v;
            }
            o[y] = -active;
        }
    }
}

/// Metrics of one scheduled snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: usize,
    pub model: F0,
    pub train_acc: f64,
    pub test_acc: f64,
    pub recon_loss: f64,
    pub probe_acc: Option<f64>,
}

/// Trains F0 on `train`, snapshotting at the configured iterations. Each
/// snapshot carries train/test accuracy and the held-out reconstruction loss
/// of a linear decoder fitted on `train` outputs.
pub fn train_f0(train: &RealDataset, test: &RealDataset, cfg: &TrainConfig) -> Vec<Checkpoint> {
    let classes = train.classes.max(test.classes);
    let mut model = F0::init(classes, train.d, cfg.seed);
    let total = cfg.total_iterations(train.n);
    let schedule = cfg.schedule.iterations(total);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.n).collect();
    let mut grad_w = vec![0.0f32; classes * train.d];
    let mut grad_b = vec![0.0f32; classes];
    let mut o = vec![0.0f32; classes];
    let mut out = Vec::with_capacity(schedule.len());
    let mut next = 0;
    let mut t = 0;

    let snap = |model: &F0, t: usize| Checkpoint {
        t,
        model: model.clone(),
        train_acc: model.accuracy(train),
        test_acc: model.accuracy(test),
        recon_loss: fit_decoder(model, train, test),
        probe_acc: None,
    };

    if schedule[next] == 0 {
        out.push(snap(&model, 0));
        next += 1;
    }
    'epochs: for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let x = train.row(i);
                model.logits_into(x, &mut o);
                output_grad(&mut o, train.labels[i] as usize, cfg.loss);
                for c in 0..classes {
                    let g = o[c];
                    if g == 0.0 {
                        continue;
                    }
                    grad_b[c] += g;
                    for (gw, xv) in grad_w[c * train.d..(c + 1) * train.d].iter_mut().zip(x) {
                        *gw += g * xv;
                    }
                }
            }
            let scale = (cfg.lr / batch.len() as f64) as f32;
            for (w, g) in model.w.iter_mut().zip(&grad_w) {
                *w -= scale * g;
            }
            if cfg.bias {
                for (b, g) in model.b.iter_mut().zip(&grad_b) {
                    *b -= scale * g;
                }
            }
            t += 1;
            if next < schedule.len() && schedule[next] == t {
                out.push(snap(&model, t));
                next += 1;
                if next == schedule.len() {
                    break 'epochs;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::data::Split;

    pub(crate) fn toy(n: usize, seed: u64) -> RealDataset {
        // two well-separated blobs in 16 dimensions
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0f32, 0.1).unwrap();
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = (i % 2) as u8;
            for j in 0..16 {
                let base = if (j < 8) == (y == 0) { 0.8 } else { 0.2 };
                images.push((base + noise.sample(&mut rng)).clamp(0.0, 1.0));
            }
            labels.push(y);
        }
        RealDataset { name: "toy".into(), split: Split::Train, n, d: 16, classes: 2, images, labels }
    }

    #[test]
    fn schedule_arithmetic() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.total_iterations(10_000), 256 * 79);
        let s = cfg.schedule.iterations(cfg.total_iterations(10_000));
        assert_eq!(s.first(), Some(&0));
        assert_eq!(s.last(), Some(&16384));
        assert_eq!(s.len(), 16);
    }

    #[test]
    fn frozen_training() {
        let cfg = TrainConfig { lr: 0.0, epochs: 2, batch: 16, ..Default::default() };
        let ck = train_f0(&toy(64, 1), &toy(32, 2), &cfg);
        assert!(ck.iter().all(|c| c.model == ck[0].model));
    }

    #[test]
    fn learns_blobs() {
        let cfg = TrainConfig { lr: 0.5, epochs: 20, batch: 16, ..Default::default() };
        let ck = train_f0(&toy(256, 1), &toy(128, 2), &cfg);
        assert!(ck.last().unwrap().test_acc > 0.95);
        let hinge = train_f0(&toy(256, 1), &toy(128, 2), &TrainConfig { loss: Loss::Hinge, ..cfg });
        assert!(hinge.last().unwrap().test_acc > 0.95);
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = TrainConfig { lr: 0.1, epochs: 3, batch: 16, seed: 4, ..Default::default() };
        let a = train_f0(&toy(64, 1), &toy(32, 2), &cfg);
        let b = train_f0(&toy(64, 1), &toy(32, 2), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn hinge_gradient() {
        let mut o = [0.0f32, 0.5, 3.0];
        output_grad(&mut o, 2, Loss::Hinge);
        assert_eq!(o, [0.0, 0.0, -0.0]);
        let mut o = [0.0f32, 0.5, 0.8];
        output_grad(&mut o, 2, Loss::Hinge);
        assert_eq!(o, [1.0, 1.0, -2.0]);
    }
}
