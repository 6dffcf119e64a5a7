//! Synthetic weak/strong-feature data model and the symmetry-reduced softmax
//! outputs shared by the theory modules.
//!
//! Every class `y` owns a contiguous block `A_y = [y·d/l, (y+1)·d/l)` of input
//! attributes. Half of the samples of a class are *weak* (value 1 on `A_y`),
//! the other half *strong* (value `k` on `A_y`); all other attributes are 0.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("class count l must be at least 2, got {0}")]
    TooFewClasses(usize),
    #[error("strong-feature factor k must be at least 2, got {0}")]
    WeakFactor(f64),
    #[error("input dimension d={d} is not a positive multiple of l={l}")]
    DimensionNotDivisible { d: usize, l: usize },
    #[error("sample count n={n} is not a positive multiple of 2l={two_l}")]
    SamplesNotDivisible { n: usize, two_l: usize },
    #[error("learning rate must be finite and non-negative, got {0}")]
    LearningRate(f64),
}

/// Weight initialization of the single dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Every weight equals `1/d`.
    Deterministic,
    /// Weights drawn i.i.d. from `N(0, 1/d)`.
    Random { seed: u64 },
}

/// A synthetic problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub k: f64,
    pub lambda: f64,
    pub init: Init,
}

impl ModelParams {
    /// Deterministically initialized instance; validated.
    pub fn new(n: usize, d: usize, l: usize, k: f64, lambda: f64) -> Result<Self, ParamError> {
        let params = Self { n, d, l, k, lambda, init: Init::Deterministic };
        params.validate()?;
        Ok(params)
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    /// `λ = 0` is accepted so that frozen runs can be expressed; the strict
    /// positivity of the learning rate only matters to the asymptotic bounds.
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.l < 2 {
            return Err(ParamError::TooFewClasses(self.l));
        }
        if !(self.k >= 2.0) || !self.k.is_finite() {
            return Err(ParamError::WeakFactor(self.k));
        }
        if self.d == 0 || !self.d.is_multiple_of(self.l) {
            return Err(ParamError::DimensionNotDivisible { d: self.d, l: self.l });
        }
        if self.n == 0 || !self.n.is_multiple_of(2 * self.l) {
            return Err(ParamError::SamplesNotDivisible { n: self.n, two_l: 2 * self.l });
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(ParamError::LearningRate(self.lambda));
        }
        Ok(())
    }

    /// Size `d/l` of each active attribute block.
    pub fn block(&self) -> usize {
        self.d / self.l
    }

    /// Attribute range `A_y`.
    pub fn block_range(&self, y: usize) -> std::ops::Range<usize> {
        let b = self.block();
        y * b..(y + 1) * b
    }

    /// Per-iteration scale `λd/(2l²)` of the weight-sum update.
    pub fn step_scale(&self) -> f64 {
        let l = self.l as f64;
        self.lambda * self.d as f64 / (2.0 * l * l)
    }

    /// `1/l`, the initial value of both weight sums under deterministic init.
    pub fn uniform(&self) -> f64 {
        1.0 / self.l as f64
    }
}

/// Symmetry-reduced state: `f = S_{y,y}` and `u = S_{y,y'≠y}` at iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymState {
    pub t: usize,
    pub f: f64,
    pub u: f64,
}

impl SymState {
    pub fn new(t: usize, f: f64, u: f64) -> Self {
        Self { t, f, u }
    }

    pub fn initial(params: &ModelParams) -> Self {
        let s = params.uniform();
        Self { t: 0, f: s, u: s }
    }
}

/// The four distinct softmax outputs under full symmetry.
///
/// `q_self_*` is the probability a class-`y` sample assigns to `y`;
/// `q_cross_*` is the probability a sample of another class assigns to `y`,
/// which by symmetry equals the probability a class-`y` sample assigns to any
/// single wrong class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbs {
    pub q_self_weak: f64,
    pub q_self_strong: f64,
    pub q_cross_weak: f64,
    pub q_cross_strong: f64,
}

impl ClassProbs {
    /// Probability vector of one archetype summed over all `l` classes.
    pub fn normalization(&self, l: usize) -> (f64, f64) {
        let others = (l - 1) as f64;
        (
            self.q_self_weak + others * self.q_cross_weak,
            self.q_self_strong + others * self.q_cross_strong,
        )
    }
}

/// `(own, other)` softmax entries for a sample of strength `v`; max-subtracted.
fn softmax_pair(f: f64, u: f64, v: f64, l: usize) -> (f64, f64) {
    let (a, b) = (v * f, v * u);
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let s = ea + (l - 1) as f64 * eb;
    (ea / s, eb / s)
}

pub fn class_probs(state: &SymState, params: &ModelParams) -> ClassProbs {
    let (q_self_weak, q_cross_weak) = softmax_pair(state.f, state.u, 1.0, params.l);
    let (q_self_strong, q_cross_strong) = softmax_pair(state.f, state.u, params.k, params.l);
    ClassProbs { q_self_weak, q_self_strong, q_cross_weak, q_cross_strong }
}

/// Generated samples. `inputs` is row-major `n × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub d: usize,
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
    pub weak_mask: Vec<bool>,
}

impl Dataset {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }
}

/// Class-major, weak-before-strong sample order.
pub fn generate_dataset(params: &ModelParams) -> Result<Dataset, ParamError> {
    params.validate()?;
    let ModelParams { n, d, l, k, .. } = *params;
    let half = n / (2 * l);
    let mut inputs = vec![0.0; n * d];
    let mut labels = Vec::with_capacity(n);
    let mut weak_mask = Vec::with_capacity(n);
    let mut i = 0;
    for y in 0..l {
        for (weak, value) in [(true, 1.0), (false, k)] {
            for _ in 0..half {
                for j in params.block_range(y) {
                    inputs[i * d + j] = value;
                }
                labels.push(y);
                weak_mask.push(weak);
                i += 1;
            }
        }
    }
    Ok(Dataset { n, d, inputs, labels, weak_mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_params() {
        assert_eq!(ModelParams::new(8, 4, 1, 2.0, 1.0), Err(ParamError::TooFewClasses(1)));
        assert!(matches!(ModelParams::new(8, 5, 2, 2.0, 1.0), Err(ParamError::DimensionNotDivisible { .. })));
        assert!(matches!(ModelParams::new(6, 4, 2, 2.0, 1.0), Err(ParamError::SamplesNotDivisible { .. })));
        assert!(matches!(ModelParams::new(8, 4, 2, 1.0, 1.0), Err(ParamError::WeakFactor(_))));
        assert!(matches!(ModelParams::new(8, 4, 2, 2.0, -1.0), Err(ParamError::LearningRate(_))));
    }

    #[test]
    fn small_dataset_rows() {
        let p = ModelParams::new(8, 4, 2, 2.0, 1.0).unwrap();
        let ds = generate_dataset(&p).unwrap();
        // class 0: rows 0,1 weak, rows 2,3 strong; class 1 follows
        assert_eq!(ds.row(0), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(ds.row(2), &[2.0, 2.0, 0.0, 0.0]);
        assert_eq!(ds.row(6), &[0.0, 0.0, 2.0, 2.0]);
        assert_eq!(ds.labels, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn balanced_split() {
        let p = ModelParams::new(4, 2, 2, 2.0, 1.0).unwrap();
        let ds = generate_dataset(&p).unwrap();
        assert_eq!(ds.n, 4);
        for y in 0..2 {
            let weak = (0..4).filter(|&i| ds.labels[i] == y && ds.weak_mask[i]).count();
            let strong = (0..4).filter(|&i| ds.labels[i] == y && !ds.weak_mask[i]).count();
            assert_eq!((weak, strong), (1, 1));
        }
    }

    #[test]
    fn row_sums_match_block_mass() {
        let p = ModelParams::new(12, 6, 3, 3.0, 1.0).unwrap();
        let ds = generate_dataset(&p).unwrap();
        for i in 0..ds.n {
            let s: f64 = ds.row(i).iter().sum();
            let expected = if ds.weak_mask[i] { 2.0 } else { 6.0 };
            assert_eq!(s, expected);
        }
    }

    #[test]
    fn uniform_at_init() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::initial(&p), &p);
        for v in [q.q_self_weak, q.q_self_strong, q.q_cross_weak, q.q_cross_strong] {
            assert!((v - 0.1).abs() <= 1e-15);
        }
    }

    #[test]
    fn closed_form_values() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::new(0, 1.0, 0.0), &p);
        // e/(e+9) and e²/(e²+9)
        assert!((q.q_self_weak - 0.231_969_316_684_073_9).abs() < 1e-12);
        assert!((q.q_self_strong - 0.450_853_060_379_283_8).abs() < 1e-12);
    }

    #[test]
    fn saturation_is_finite() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::new(0, 700.0, 0.0), &p);
        assert_eq!(q.q_self_weak, 1.0);
        assert!(q.q_cross_weak < 1e-300);
        let q = class_probs(&SymState::new(0, -700.0, 700.0), &p);
        assert!(q.q_self_strong.is_finite() && q.q_self_strong >= 0.0);
    }

    proptest! {
        #[test]
        fn probabilities_normalize(f in -50.0f64..50.0, u in -50.0f64..50.0, l in 2usize..200, k in 2.0f64..5.0) {
            let p = ModelParams::new(2 * l, l, l, k, 1.0).unwrap();
            let (weak, strong) = class_probs(&SymState::new(0, f, u), &p).normalization(l);
            prop_assert!((weak - 1.0).abs() < 1e-12);
            prop_assert!((strong - 1.0).abs() < 1e-12);
        }

        #[test]
        fn self_probability_grows_with_f(f in -5.0f64..5.0, df in 1e-3f64..1.0, u in -5.0f64..5.0, l in 2usize..50) {
            let p = ModelParams::new(2 * l, l, l, 2.0, 1.0).unwrap();
            let a = class_probs(&SymState::new(0, f, u), &p);
            let b = class_probs(&SymState::new(0, f + df, u), &p);
            prop_assert!(b.q_self_weak > a.q_self_weak);
            prop_assert!(b.q_self_strong > a.q_self_strong);
        }

        #[test]
        fn strong_dominates_weak(u in -5.0f64..5.0, gap in 1e-3f64..10.0, l in 2usize..50, k in 2.0f64..4.0) {
            let p = ModelParams::new(2 * l, l, l, k, 1.0).unwrap();
            let q = class_probs(&SymState::new(0, u + gap, u), &p);
            prop_assert!(q.q_self_strong >= q.q_self_weak);
            for v in [q.q_self_weak, q.q_self_strong, q.q_cross_weak, q.q_cross_strong] {
                prop_assert!(v > 0.0 && v < 1.0);
            }
        }
    }
}
