//! Explicit `l × d` weight matrix trained by full-batch gradient descent on a
//! generated [`Dataset`]. Used to check the symmetry reduction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::model::{Dataset, Init, ModelParams, SymState};

/// Largest tolerated disagreement between sums that symmetry says are equal.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension mismatch: weights are {l}x{d}, data has d={data_d}")]
    DimensionMismatch { l: usize, d: usize, data_d: usize },
    #[error("symmetry broken: {what} differ by {gap:e}")]
    SymmetryBroken { what: &'static str, gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub l: usize,
    pub d: usize,
    /// Row-major, one row per class.
    pub w: Vec<f64>,
    pub t: usize,
}

impl WeightMatrix {
    pub fn deterministic(l: usize, d: usize) -> Self {
        Self { l, d, w: vec![1.0 / d as f64; l * d], t: 0 }
    }

    /// Entries i.i.d. `N(0, 1/d)`, drawn row-major from a seeded ChaCha8 stream.
    pub fn random(l: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).unwrap();
        let w = (0..l * d).map(|_| normal.sample(&mut rng)).collect();
        Self { l, d, w, t: 0 }
    }

    pub fn init(params: &ModelParams) -> Self {
        match params.init {
            Init::Deterministic => Self::deterministic(params.l, params.d),
            Init::Random { seed } => Self::random(params.l, params.d, seed),
        }
    }

    /// Symmetric matrix realizing a reduced state: every weight of class `y'`
    /// on block `A_y` equals `S_{y,y'}·l/d`.
    pub fn from_sym_state(state: &SymState, params: &ModelParams) -> Self {
        let b = params.block() as f64;
        let mut m = Self::deterministic(params.l, params.d);
        for c in 0..params.l {
            for y in 0..params.l {
                let v = if c == y { state.f } else { state.u } / b;
                for j in params.block_range(y) {
                    m.w[c * params.d + j] = v;
                }
            }
        }
        m.t = state.t;
        m
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.w[c * self.d..(c + 1) * self.d]
    }

    pub fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.row(c).iter().zip(x).map(|(w, x)| w * x).sum();
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; self.l];
        self.logits_into(x, &mut o);
        o
    }

    fn check(&self, data: &Dataset) -> Result<(), OracleError> {
        if data.d != self.d {
            return Err(OracleError::DimensionMismatch { l: self.l, d: self.d, data_d: data.d });
        }
        Ok(())
    }

    /// `S_{y,c}`: sum of class-`c` weights over block `A_y`, as an `l × l`
    /// row-major matrix indexed `[y][c]`.
    pub fn block_sums(&self, params: &ModelParams) -> Vec<f64> {
        let l = self.l;
        let mut s = vec![0.0; l * l];
        for y in 0..l {
            for c in 0..l {
                s[y * l + c] = params.block_range(y).map(|j| self.w[c * self.d + j]).sum();
            }
        }
        s
    }

    /// Largest max-min spread of a class row within one block.
    pub fn block_spread(&self, params: &ModelParams) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.l {
            for y in 0..self.l {
                let (lo, hi) = params
                    .block_range(y)
                    .map(|j| self.w[c * self.d + j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                worst = worst.max(hi - lo);
            }
        }
        worst
    }

    /// Mean diagonal and mean off-diagonal block sums.
    pub fn averaged_sums(&self, params: &ModelParams) -> SymState {
        let l = self.l;
        let s = self.block_sums(params);
        let mut diag = 0.0;
        let mut off = 0.0;
        for y in 0..l {
            for c in 0..l {
                if y == c {
                    diag += s[y * l + c];
                } else {
                    off += s[y * l + c];
                }
            }
        }
        SymState::new(self.t, diag / l as f64, off / (l * (l - 1)) as f64)
    }
}

/// Full-batch gradient step on mean cross-entropy; gradients are accumulated
/// in sample order.
pub fn full_step(w: &WeightMatrix, data: &Dataset, lambda: f64) -> Result<WeightMatrix, OracleError> {
    w.check(data)?;
    let (l, d) = (w.l, w.d);
    let mut grad = vec![0.0; l * d];
    let mut o = vec![0.0; l];
    for i in 0..data.n {
        let x = data.row(i);
        w.logits_into(x, &mut o);
        softmax_in_place(&mut o);
        o[data.labels[i]] -= 1.0;
        for c in 0..l {
            let g = &mut grad[c * d..(c + 1) * d];
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += o[c] * xj;
            }
        }
    }
    let scale = lambda / data.n as f64;
    let next = w.w.iter().zip(&grad).map(|(wv, g)| wv - scale * g).collect();
    Ok(WeightMatrix { l, d, w: next, t: w.t + 1 })
}

pub fn softmax_in_place(o: &mut [f64]) {
    let m = o.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in o.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in o.iter_mut() {
        *v /= s;
    }
}

/// Reduced state of a symmetric matrix; refuses matrices whose equivalent
/// sums or within-block entries disagree by more than [`SYMMETRY_TOL`].
pub fn reduce(w: &WeightMatrix, params: &ModelParams) -> Result<SymState, OracleError> {
    if w.l != params.l || w.d != params.d {
        return Err(OracleError::DimensionMismatch { l: w.l, d: w.d, data_d: params.d });
    }
    let l = w.l;
    let s = w.block_sums(params);
    let (f, u) = (s[0], s[1]);
    let mut gap_self: f64 = 0.0;
    let mut gap_cross: f64 = 0.0;
    for y in 0..l {
        for c in 0..l {
            let v = s[y * l + c];
            if y == c {
                gap_self = gap_self.max((v - f).abs());
            } else {
                gap_cross = gap_cross.max((v - u).abs());
            }
        }
    }
    if gap_self > SYMMETRY_TOL {
        return Err(OracleError::SymmetryBroken { what: "within-class sums", gap: gap_self });
    }
    if gap_cross > SYMMETRY_TOL {
        return Err(OracleError::SymmetryBroken { what: "cross-class sums", gap: gap_cross });
    }
    let spread = w.block_spread(params);
    if spread > SYMMETRY_TOL {
        return Err(OracleError::SymmetryBroken { what: "weights within a block", gap: spread });
    }
    Ok(SymState::new(w.t, f, u))
}

/// Mean cross-entropy and argmax accuracy, ties to the lowest class index.
pub fn loss_and_accuracy(w: &WeightMatrix, data: &Dataset) -> Result<(f64, f64), OracleError> {
    w.check(data)?;
    let mut o = vec![0.0; w.l];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for i in 0..data.n {
        w.logits_into(data.row(i), &mut o);
        let y = data.labels[i];
        let m = o.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + o.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - o[y];
        if argmax(&o) == y {
            correct += 1;
        }
    }
    Ok((loss / data.n as f64, correct as f64 / data.n as f64))
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Runs `steps` oracle iterations alongside the reduced dynamics and returns
/// the largest absolute deviation of `(f, u)` plus the largest block spread.
pub fn compare_with_reduced(params: &ModelParams, steps: usize) -> Result<OracleComparison, OracleError> {
    let data = crate::model::generate_dataset(params).expect("validated params");
    let mut w = WeightMatrix::init(params);
    let mut s = crate::dynamics::initial_state(params);
    let mut cmp = OracleComparison { steps, max_dev: 0.0, max_spread: 0.0, rows: Vec::with_capacity(steps + 1) };
    for t in 0..=steps {
        let r = reduce(&w, params)?;
        let dev = (r.f - s.f).abs().max((r.u - s.u).abs());
        cmp.max_dev = cmp.max_dev.max(dev);
        cmp.max_spread = cmp.max_spread.max(w.block_spread(params));
        cmp.rows.push((t, r.f, r.u, s.f, s.u));
        if t < steps {
            w = full_step(&w, &data, params.lambda)?;
            s = crate::dynamics::step(&s, params);
        }
    }
    Ok(cmp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub steps: usize,
    pub max_dev: f64,
    pub max_spread: f64,
    /// `(t, f_oracle, u_oracle, f_reduced, u_reduced)`
    pub rows: Vec<(usize, f64, f64, f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_dataset;

    fn small() -> (ModelParams, Dataset) {
        let p = ModelParams::new(8, 4, 2, 2.0, 1.0).unwrap();
        let d = generate_dataset(&p).unwrap();
        (p, d)
    }

    #[test]
    fn zero_rate_keeps_weights() {
        let (p, d) = small();
        let w = WeightMatrix::init(&p);
        let n = full_step(&w, &d, 0.0).unwrap();
        assert_eq!(n.w, w.w);
        assert_eq!(n.t, 1);
    }

    #[test]
    fn block_structure_after_one_step() {
        let (p, d) = small();
        let n = full_step(&WeightMatrix::init(&p), &d, 1.0).unwrap();
        assert!(n.block_spread(&p) < 1e-12);
        assert_eq!(n.w[0], n.w[1]);
        assert_eq!(n.w[2], n.w[3]);
        assert!(n.w[0] > n.w[2]);
    }

    #[test]
    fn single_sample_gradient() {
        let ds = Dataset { n: 1, d: 2, inputs: vec![1.0, 0.0], labels: vec![0], weak_mask: vec![true] };
        let w = WeightMatrix::deterministic(2, 2);
        let n = full_step(&w, &ds, 1.0).unwrap();
        // q = 0.5 for both classes
        assert!((n.w[0] - (0.5 + 0.5)).abs() < 1e-15);
        assert!((n.w[2] - (0.5 - 0.5)).abs() < 1e-15);
        assert_eq!(n.w[1], 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let (_, d) = small();
        let w = WeightMatrix::deterministic(2, 6);
        assert!(matches!(full_step(&w, &d, 1.0), Err(OracleError::DimensionMismatch { .. })));
    }

    #[test]
    fn reduce_deterministic() {
        let p = ModelParams::new(40, 20, 5, 2.0, 0.05).unwrap();
        let s = reduce(&WeightMatrix::init(&p), &p).unwrap();
        assert!((s.f - 0.2).abs() < 1e-15 && (s.u - 0.2).abs() < 1e-15);
    }

    #[test]
    fn reduce_matches_dynamics_after_100() {
        let p = ModelParams::new(40, 20, 5, 2.0, 0.05).unwrap();
        let cmp = compare_with_reduced(&p, 100).unwrap();
        assert!(cmp.max_dev < 1e-8, "{}", cmp.max_dev);
        assert!(cmp.max_spread < 1e-12);
    }

    #[test]
    fn reduce_refuses_random() {
        let p = ModelParams::new(40, 20, 5, 2.0, 0.05).unwrap().with_init(Init::Random { seed: 7 });
        assert!(matches!(reduce(&WeightMatrix::init(&p), &p), Err(OracleError::SymmetryBroken { .. })));
    }

    #[test]
    fn uniform_loss_and_accuracy() {
        let p = ModelParams::new(40, 20, 5, 2.0, 0.05).unwrap();
        let d = generate_dataset(&p).unwrap();
        let (loss, acc) = loss_and_accuracy(&WeightMatrix::init(&p), &d).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-14);
        assert!((acc - 0.2).abs() < 1e-15);
    }

    #[test]
    fn saturated_loss_and_accuracy() {
        let p = ModelParams::new(40, 20, 5, 2.0, 0.05).unwrap();
        let d = generate_dataset(&p).unwrap();
        let w = WeightMatrix::from_sym_state(&SymState::new(0, 20.0, -1.0), &p);
        let (loss, acc) = loss_and_accuracy(&w, &d).unwrap();
        assert!(loss < 1e-3);
        assert_eq!(acc, 1.0);
        assert_eq!(reduce(&w, &p).unwrap().f, 20.0);
    }

    #[test]
    fn coin_flip_loss() {
        let ds = Dataset { n: 1, d: 2, inputs: vec![1.0, 0.0], labels: vec![1], weak_mask: vec![true] };
        let (loss, acc) = loss_and_accuracy(&WeightMatrix::deterministic(2, 2), &ds).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn averaged_sums_of_random_init_are_small() {
        let p = ModelParams::new(200, 1000, 10, 2.0, 0.01).unwrap().with_init(Init::Random { seed: 1 });
        let s = WeightMatrix::init(&p).averaged_sums(&p);
        // each S ~ N(0, 1/l); averages shrink further
        assert!(s.f.abs() < 0.5 && s.u.abs() < 0.2);
    }
}
