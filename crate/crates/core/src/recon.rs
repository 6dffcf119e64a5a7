//! Linear reconstruction of one active attribute from the softmax output of
//! its owning class, and the four-group error decomposition.
//!
//! For attribute `j ∈ A_y` the samples fall into four groups: weak and strong
//! samples of class `y` (target 1 and `k`, abscissa `q_self_*`) and weak and
//! strong samples of the other classes (target 0, abscissa `q_cross_*`).

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{ridge_lstsq, weighted_line};
use crate::model::{ClassProbs, Dataset, ModelParams};
use crate::oracle::{softmax_in_place, OracleError, WeightMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconError {
    #[error("strong anchors coincide (gap {0:e}); use the constant t=0 fit")]
    DegenerateAnchor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    ConstantT0,
    TwoPointGj,
    OptimalLS,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconFit {
    pub kind: FitKind,
    pub slope: f64,
    pub intercept: f64,
}

impl ReconFit {
    pub fn eval(&self, o: f64) -> f64 {
        self.slope * o + self.intercept
    }
}

/// How the four group errors are combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `(1/2 − 1/l)` per zero group, `1/l` per value group. Reproduces the
    /// closed forms `R(0) = (l(1+k²) − (k+1)²)/l²` and `R(∞) = (k−1)²/l`.
    Paper,
    /// Sample frequencies: `(1−1/l)/2` per zero group, `1/(2l)` per value group.
    Exact,
    /// `(1 − 1/(2l))` per zero group, `1/l` per value group, as the
    /// decomposition is usually written. Weights sum to more than 1.
    Decomposition,
}

/// Group weights `(zero_weak, zero_strong, one, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchetypeWeights {
    pub zero_weak: f64,
    pub zero_strong: f64,
    pub one: f64,
    pub k: f64,
}

impl Weighting {
    pub fn weights(self, l: usize) -> ArchetypeWeights {
        let l = l as f64;
        let (zero, value) = match self {
            Weighting::Paper => (0.5 - 1.0 / l, 1.0 / l),
            Weighting::Exact => ((1.0 - 1.0 / l) / 2.0, 1.0 / (2.0 * l)),
            Weighting::Decomposition => (1.0 - 1.0 / (2.0 * l), 1.0 / l),
        };
        ArchetypeWeights { zero_weak: zero, zero_strong: zero, one: value, k: value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBreakdown {
    pub r1: f64,
    pub rk: f64,
    pub r0_weak: f64,
    pub r0_strong: f64,
    /// [`Weighting::Paper`] total.
    pub total_paper: f64,
    /// [`Weighting::Exact`] total.
    pub total_exact: f64,
}

impl ErrorBreakdown {
    pub fn from_groups(r1: f64, rk: f64, r0_weak: f64, r0_strong: f64, l: usize) -> Self {
        let mut e = Self { r1, rk, r0_weak, r0_strong, total_paper: 0.0, total_exact: 0.0 };
        e.total_paper = e.total(Weighting::Paper, l);
        e.total_exact = e.total(Weighting::Exact, l);
        e
    }

    pub fn total(&self, weighting: Weighting, l: usize) -> f64 {
        let w = weighting.weights(l);
        w.zero_weak * self.r0_weak + w.zero_strong * self.r0_strong + w.one * self.r1 + w.k * self.rk
    }
}

/// Smallest strong-anchor gap accepted by [`fit_gj`].
pub const ANCHOR_EPS: f64 = 1e-14;

/// Line through `(q_cross_strong, 0)` and `(q_self_strong, k)`.
pub fn fit_gj(probs: &ClassProbs, k: f64) -> Result<ReconFit, ReconError> {
    let gap = probs.q_self_strong - probs.q_cross_strong;
    if gap.abs() < ANCHOR_EPS {
        return Err(ReconError::DegenerateAnchor(gap));
    }
    let slope = k / gap;
    Ok(ReconFit { kind: FitKind::TwoPointGj, slope, intercept: -slope * probs.q_cross_strong })
}

/// The constant `(1+k)/l` used while all outputs are uniform.
pub fn fit_t0(params: &ModelParams) -> ReconFit {
    ReconFit { kind: FitKind::ConstantT0, slope: 0.0, intercept: (1.0 + params.k) / params.l as f64 }
}

/// Least-squares line over the four groups under the exact sample frequencies.
pub fn fit_optimal(probs: &ClassProbs, params: &ModelParams) -> ReconFit {
    fit_optimal_weighted(probs, params.k, &Weighting::Exact.weights(params.l))
}

pub fn fit_optimal_weighted(probs: &ClassProbs, k: f64, w: &ArchetypeWeights) -> ReconFit {
    let (slope, intercept) = weighted_line(&[
        (probs.q_cross_weak, 0.0, w.zero_weak),
        (probs.q_cross_strong, 0.0, w.zero_strong),
        (probs.q_self_weak, 1.0, w.one),
        (probs.q_self_strong, k, w.k),
    ]);
    ReconFit { kind: FitKind::OptimalLS, slope, intercept }
}

/// [`fit_gj`] once the anchors separate, [`fit_t0`] before.
pub fn fit_gj_or_t0(probs: &ClassProbs, params: &ModelParams) -> ReconFit {
    fit_gj(probs, params.k).unwrap_or_else(|_| fit_t0(params))
}

pub fn error_breakdown(fit: &ReconFit, probs: &ClassProbs, params: &ModelParams) -> ErrorBreakdown {
    let sq = |x: f64| x * x;
    let (r0_strong, rk) = if fit.kind == FitKind::TwoPointGj {
        // anchors are interpolated by construction
        (0.0, 0.0)
    } else {
        (sq(fit.eval(probs.q_cross_strong)), sq(params.k - fit.eval(probs.q_self_strong)))
    };
    ErrorBreakdown::from_groups(
        sq(1.0 - fit.eval(probs.q_self_weak)),
        rk,
        sq(fit.eval(probs.q_cross_weak)),
        r0_strong,
        params.l,
    )
}

/// Largest `|g(o) − h(o)|` over the four archetype abscissae, and over `[0, 1]`.
pub fn approximation_gap(g: &ReconFit, h: &ReconFit, probs: &ClassProbs) -> (f64, f64) {
    let diff = |o: f64| (g.eval(o) - h.eval(o)).abs();
    let anchors = [probs.q_cross_weak, probs.q_cross_strong, probs.q_self_weak, probs.q_self_strong]
        .into_iter()
        .map(diff)
        .fold(0.0, f64::max);
    (anchors, diff(0.0).max(diff(1.0)))
}

/// Result of fitting a full linear decoder on a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FullReconstruction {
    /// Mean squared error over all samples and attributes.
    pub mse: f64,
    /// Group errors averaged over attributes, so that totals can be formed
    /// under any [`Weighting`].
    pub groups: ErrorBreakdown,
}

/// Ridge on the decoder slopes.
pub const FULL_RIDGE: f64 = 1e-8;

/// Fits, for every attribute, `x̂_j = b_j + Σ_c s_{c,j} q_c(x)` by ridge least
/// squares over the whole dataset and reports the reconstruction error.
///
/// The decoder reads softmax probabilities, not logits: on this data a
/// bias-free map from logits recovers every input exactly.
pub fn reconstruct_full(data: &Dataset, w: &WeightMatrix, params: &ModelParams) -> Result<FullReconstruction, OracleError> {
    if data.d != w.d {
        return Err(OracleError::DimensionMismatch { l: w.l, d: w.d, data_d: data.d });
    }
    let (n, d, l) = (data.n, data.d, w.l);
    let mut x = DMatrix::<f64>::zeros(n, l + 1);
    let mut o = vec![0.0; l];
    for i in 0..n {
        w.logits_into(data.row(i), &mut o);
        softmax_in_place(&mut o);
        x[(i, 0)] = 1.0;
        for c in 0..l {
            x[(i, c + 1)] = o[c];
        }
    }
    let y = DMatrix::from_row_slice(n, d, &data.inputs);
    let beta = ridge_lstsq(&x, &y, FULL_RIDGE, true);
    let pred = &x * &beta;

    let mut sum = 0.0;
    // [r1, rk, r0_weak, r0_strong] sums and counts
    let mut g = [0.0; 4];
    let mut cnt = [0usize; 4];
    for i in 0..n {
        for j in 0..d {
            let e = (pred[(i, j)] - y[(i, j)]).powi(2);
            sum += e;
            let owner = j / params.block();
            let idx = match (data.labels[i] == owner, data.weak_mask[i]) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            g[idx] += e;
            cnt[idx] += 1;
        }
    }
    let m = |i: usize| g[i] / cnt[i] as f64;
    Ok(FullReconstruction {
        mse: sum / (n * d) as f64,
        groups: ErrorBreakdown::from_groups(m(0), m(1), m(2), m(3), l),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{class_probs, SymState};
    use proptest::prelude::*;

    fn probs(qs: f64, qc: f64) -> ClassProbs {
        ClassProbs { q_self_weak: qs, q_self_strong: qs, q_cross_weak: qc, q_cross_strong: qc }
    }

    #[test]
    fn gj_hand_case() {
        let fit = fit_gj(&probs(0.9, 0.1), 2.0).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-15);
        assert!((fit.eval(0.9) - 2.0).abs() < 1e-15);
        assert!(fit.eval(0.1).abs() < 1e-15);
    }

    #[test]
    fn gj_degenerate() {
        assert!(matches!(fit_gj(&probs(0.1, 0.1), 2.0), Err(ReconError::DegenerateAnchor(_))));
    }

    #[test]
    fn gj_from_state() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::new(0, 1.0, 0.05), &p);
        let fit = fit_gj(&q, 2.0).unwrap();
        assert!((fit.slope - 2.0 / (q.q_self_strong - q.q_cross_strong)).abs() < 1e-12);
        assert!((fit.eval(q.q_self_strong) - 2.0).abs() < 1e-12);
        assert!(fit.eval(q.q_cross_strong).abs() < 1e-12);
    }

    #[test]
    fn t0_constants() {
        assert_eq!(fit_t0(&ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap()).intercept, 0.3);
        let f = fit_t0(&ModelParams::new(6, 3, 3, 2.0, 1.0).unwrap());
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn optimal_at_uniform_outputs() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = probs(0.1, 0.1);
        let exact = fit_optimal(&q, &p);
        assert_eq!(exact.slope, 0.0);
        assert!((exact.intercept - 0.15).abs() < 1e-15);
        let paper = fit_optimal_weighted(&q, 2.0, &Weighting::Paper.weights(10));
        assert!((paper.intercept - 0.3).abs() < 1e-15);
    }

    #[test]
    fn optimal_on_strong_anchors_is_gj() {
        let p = ModelParams::new(20, 10, 10, 3.0, 1.0).unwrap();
        let q = class_probs(&SymState::new(0, 0.7, 0.02), &p);
        let w = ArchetypeWeights { zero_weak: 0.0, zero_strong: 0.4, one: 0.0, k: 0.1 };
        let opt = fit_optimal_weighted(&q, 3.0, &w);
        let gj = fit_gj(&q, 3.0).unwrap();
        assert!((opt.slope - gj.slope).abs() < 1e-9 * gj.slope.abs());
        assert!((opt.intercept - gj.intercept).abs() < 1e-9);
    }

    #[test]
    fn gj_zeroes_anchor_groups() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::new(0, 2.0, -0.1), &p);
        let e = error_breakdown(&fit_gj(&q, 2.0).unwrap(), &q, &p);
        assert_eq!((e.rk, e.r0_strong), (0.0, 0.0));
    }

    #[test]
    fn t0_closed_form() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::initial(&p), &p);
        let e = error_breakdown(&fit_t0(&p), &q, &p);
        assert!((e.total_paper - 0.41).abs() < 1e-12);
        // the decomposition weights as usually written do not give 0.41
        assert!((e.total(Weighting::Decomposition, 10) - 0.41).abs() > 0.05);
    }

    #[test]
    fn saturated_limit() {
        let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
        let q = class_probs(&SymState::new(0, 700.0, 0.0), &p);
        let e = error_breakdown(&fit_gj(&q, 2.0).unwrap(), &q, &p);
        assert!((e.total_paper - 0.1).abs() < 1e-12);
    }

    #[test]
    fn weightings_sum() {
        for l in [2, 10, 1000] {
            for (w, total) in [(Weighting::Paper, 1.0), (Weighting::Exact, 1.0)] {
                let a = w.weights(l);
                assert!((a.zero_weak + a.zero_strong + a.one + a.k - total).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn full_decoder_matches_reduced_fit() {
        let p = ModelParams::new(200, 100, 10, 2.0, 0.05).unwrap();
        let data = crate::model::generate_dataset(&p).unwrap();
        let s = SymState::new(0, 0.9, 0.05);
        let w = WeightMatrix::from_sym_state(&s, &p);
        let full = reconstruct_full(&data, &w, &p).unwrap();
        let q = class_probs(&s, &p);
        let e = error_breakdown(&fit_optimal(&q, &p), &q, &p);
        assert!((full.mse - e.total_exact).abs() < 1e-6, "{} vs {}", full.mse, e.total_exact);
        assert!((full.groups.total_exact - full.mse).abs() < 1e-12);
    }

    #[test]
    fn full_decoder_at_init() {
        let p = ModelParams::new(40, 20, 5, 3.0, 0.05).unwrap();
        let data = crate::model::generate_dataset(&p).unwrap();
        let full = reconstruct_full(&data, &WeightMatrix::init(&p), &p).unwrap();
        let q = class_probs(&SymState::initial(&p), &p);
        let e = error_breakdown(&fit_optimal(&q, &p), &q, &p);
        assert!((full.mse - e.total_exact).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn optimal_dominates_gj(f in 0.2f64..15.0, du in 0.0f64..0.5, l in 2usize..200, k in 2.0f64..4.0) {
            let p = ModelParams::new(2 * l, l, l, k, 1.0).unwrap();
            let q = class_probs(&SymState::new(0, f, 1.0 / l as f64 - du), &p);
            if let Ok(gj) = fit_gj(&q, k) {
                let eg = error_breakdown(&gj, &q, &p);
                let eo = error_breakdown(&fit_optimal(&q, &p), &q, &p);
                prop_assert!(eo.total_exact <= eg.total_exact * (1.0 + 1e-9) + 1e-15);
                let gap = gj.eval(q.q_self_strong) - k;
                prop_assert!(gap.abs() < 1e-12 * gj.slope.abs().max(1.0));
            }
        }

        #[test]
        fn breakdown_nonnegative(s in -3.0f64..3.0, c in -3.0f64..3.0, f in -2.0f64..8.0, u in -2.0f64..2.0) {
            let p = ModelParams::new(20, 10, 10, 2.0, 1.0).unwrap();
            let q = class_probs(&SymState::new(0, f, u), &p);
            let e = error_breakdown(&ReconFit { kind: FitKind::OptimalLS, slope: s, intercept: c }, &q, &p);
            for v in [e.r1, e.rk, e.r0_weak, e.r0_strong, e.total_paper, e.total_exact] {
                prop_assert!(v >= 0.0);
            }
        }
    }
}
