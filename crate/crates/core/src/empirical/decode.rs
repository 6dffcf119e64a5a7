//! Frozen-output readouts: the linear reconstruction decoder and the linear
//! probe classifier.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::RealDataset;
use super::f0::{accuracy_of, output_grad, Loss, F0};

/// Ridge on decoder slopes.
pub const DECODER_RIDGE: f64 = 1e-6;

/// Fitted affine map `x̂ = c + Sᵀ o`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecoder {
    /// `p × d` slopes for `p` outputs.
    pub slopes: DMatrix<f64>,
    pub intercept: DVector<f64>,
}

impl LinearDecoder {
    /// Minimizes `mean_i ‖x̂_i − x_i‖² + ridge·‖S‖²` through the centered normal
    /// equations. `o` is row-major `n × p`, `x` row-major `n × d`.
    pub fn fit(o: &[f64], p: usize, x: &[f64], d: usize, ridge: f64) -> Self {
        let n = o.len() / p;
        assert_eq!(x.len(), n * d, "row mismatch");
        let nf = n as f64;
        let mut mo = vec![0.0; p];
        let mut mx = vec![0.0; d];
        for i in 0..n {
            for a in 0..p {
                mo[a] += o[i * p + a] / nf;
            }
            for j in 0..d {
                mx[j] += x[i * d + j] / nf;
            }
        }
        let mut coo = DMatrix::<f64>::zeros(p, p);
        let mut cox = DMatrix::<f64>::zeros(p, d);
        let mut oc = vec![0.0; p];
        for i in 0..n {
            for a in 0..p {
                oc[a] = o[i * p + a] - mo[a];
            }
            for a in 0..p {
                for b in 0..p {
                    coo[(a, b)] += oc[a] * oc[b] / nf;
                }
                let row = &x[i * d..(i + 1) * d];
                for j in 0..d {
                    cox[(a, j)] += oc[a] * (row[j] - mx[j]) / nf;
                }
            }
        }
        for a in 0..p {
            coo[(a, a)] += ridge;
        }
        let slopes = match coo.clone().cholesky() {
            Some(ch) => ch.solve(&cox),
            None => coo.svd(true, true).solve(&cox, 1e-14).expect("svd solve"),
        };
        let mut intercept = DVector::from_vec(mx);
        for j in 0..d {
            for a in 0..p {
                intercept[j] -= slopes[(a, j)] * mo[a];
            }
        }
        Self { slopes, intercept }
    }

    /// Mean over samples of `‖x̂ − x‖²`.
    pub fn error(&self, o: &[f64], x: &[f64]) -> f64 {
        let (p, d) = self.slopes.shape();
        let n = o.len() / p;
        let mut total = 0.0;
        let mut pred = vec![0.0; d];
        for i in 0..n {
            pred.copy_from_slice(self.intercept.as_slice());
            for a in 0..p {
                let v = o[i * p + a];
                for (j, pj) in pred.iter_mut().enumerate() {
                    *pj += v * self.slopes[(a, j)];
                }
            }
            total += pred.iter().zip(&x[i * d..(i + 1) * d]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        total / n as f64
    }
}

fn outputs_f64(model: &F0, data: &RealDataset) -> Vec<f64> {
    model.logits(data).into_iter().map(f64::from).collect()
}

fn pixels_f64(data: &RealDataset) -> Vec<f64> {
    data.images.iter().map(|&v| f64::from(v)).collect()
}

/// Fits the decoder from `model` outputs to inputs on `fit_data` and returns
/// its reconstruction loss on `eval_data`.
pub fn fit_decoder(model: &F0, fit_data: &RealDataset, eval_data: &RealDataset) -> f64 {
    let dec = LinearDecoder::fit(&outputs_f64(model, fit_data), model.classes, &pixels_f64(fit_data), fit_data.d, DECODER_RIDGE);
    dec.error(&outputs_f64(model, eval_data), &pixels_f64(eval_data))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// z-score each frozen output with probe-train statistics first.
    pub standardize: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { lr: 0.003, epochs: 20, batch: 128, seed: 0, standardize: true }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("probe data has d={got}, frozen layer expects d={want}")]
pub struct ProbeDimension {
    pub got: usize,
    pub want: usize,
}

/// Trains a dense softmax layer on frozen `model` outputs of `train` and
/// returns its accuracy on `test`.
pub fn linear_probe(model: &F0, train: &RealDataset, test: &RealDataset, cfg: &ProbeConfig) -> Result<f64, ProbeDimension> {
    for ds in [train, test] {
        if ds.d != model.d {
            return Err(ProbeDimension { got: ds.d, want: model.d });
        }
    }
    let p = model.classes;
    let c = train.classes.max(test.classes);
    let mut xtr = model.logits(train);
    let mut xte = model.logits(test);
    if cfg.standardize {
        let n = train.n as f64;
        for a in 0..p {
            let mean = xtr.iter().skip(a).step_by(p).map(|&v| f64::from(v)).sum::<f64>() / n;
            let var = xtr.iter().skip(a).step_by(p).map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for x in [&mut xtr, &mut xte] {
                for v in x.iter_mut().skip(a).step_by(p) {
                    *v = ((f64::from(*v) - mean) / sd) as f32;
                }
            }
        }
    }
    let mut w = vec![0.0f32; c * p];
    let mut b = vec![0.0f32; c];
    let mut gw = vec![0.0f32; c * p];
    let mut gb = vec![0.0f32; c];
    let mut o = vec![0.0f32; c];
    let mut order: Vec<usize> = (0..train.n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch) {
            gw.iter_mut().for_each(|v| *v = 0.0);
            gb.iter_mut().for_each(|v| *v = 0.0);
            for &i in batch {
                let x = &xtr[i * p..(i + 1) * p];
                for k in 0..c {
                    o[k] = b[k] + w[k * p..(k + 1) * p].iter().zip(x).map(|(a, b)| a * b).sum::<f32>();
                }
                output_grad(&mut o, train.labels[i] as usize, Loss::CrossEntropy);
                for k in 0..c {
                    gb[k] += o[k];
                    for a in 0..p {
                        gw[k * p + a] += o[k] * x[a];
                    }
                }
            }
            let s = (cfg.lr / batch.len() as f64) as f32;
            w.iter_mut().zip(&gw).for_each(|(w, g)| *w -= s * g);
            b.iter_mut().zip(&gb).for_each(|(b, g)| *b -= s * g);
        }
    }
    let mut out = vec![0.0f32; test.n * c];
    for i in 0..test.n {
        let x = &xte[i * p..(i + 1) * p];
        for k in 0..c {
            out[i * c + k] = b[k] + w[k * p..(k + 1) * p].iter().zip(x).map(|(a, b)| a * b).sum::<f32>();
        }
    }
    Ok(accuracy_of(&out, c, &test.labels))
}
