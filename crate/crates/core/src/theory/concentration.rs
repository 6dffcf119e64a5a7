use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use libm::erfc;

use crate::model::ModelParams;

/// `(e^{−(a+1)²/(2σ²)}, e^{−a²/(2σ²)})` as stated for `P(X ≥ a)`, `X ~ N(0, σ²)`.
pub fn gaussian_tail_bounds(a: f64, sigma: f64) -> (f64, f64) {
    assert!(a > 0.0 && sigma > 0.0, "a and sigma must be positive");
    let s2 = 2.0 * sigma * sigma;
    ((-(a + 1.0).powi(2) / s2).exp(), (-a * a / s2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck {
    pub a: f64,
    pub sigma: f64,
    pub exact: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TailCheck {
    pub fn upper_holds(&self) -> bool {
        self.exact <= self.upper
    }
    pub fn lower_holds(&self) -> bool {
        self.lower <= self.exact
    }
    /// Lower bound with the extra factor 1/2.
    pub fn half_lower_holds(&self) -> bool {
        0.5 * self.lower <= self.exact
    }
}

pub fn tail_check(a: f64, sigma: f64) -> TailCheck {
    let (lower, upper) = gaussian_tail_bounds(a, sigma);
    let exact = 0.5 * erfc(a / (sigma * std::f64::consts::SQRT_2));
    TailCheck { a, sigma, exact, lower, upper }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationReport {
    pub l: usize,
    pub d: usize,
    pub trials: usize,
    /// Half-width `2√(log l)/l`.
    pub band: f64,
    /// Fraction of trials with every `|S_y| ≤ band`.
    pub fraction: f64,
    /// `1 − 4/l²`.
    pub floor: f64,
    /// Sample variance of all block sums.
    pub variance: f64,
    /// Same fraction for the half-width `2√(log l)/√l`, which matches the
    /// standard deviation `1/√l` of each block sum.
    pub fraction_sqrt_band: f64,
}

impl ConcentrationReport {
    pub fn fraction_pass(&self) -> bool {
        self.fraction >= self.floor
    }

    pub fn variance_pass(&self) -> bool {
        (self.variance * self.l as f64 - 1.0).abs() <= 0.05
    }
}

/// Per trial, draws `d` weights from `N(0, 1/d)` and forms the `l` block sums.
pub fn init_concentration_mc(params: &ModelParams, trials: usize, seed: u64) -> ConcentrationReport {
    assert!(trials >= 10_000, "at least 10^4 trials");
    let (l, d) = (params.l, params.d);
    let b = params.block();
    let lf = l as f64;
    let band = 2.0 * lf.ln().sqrt() / lf;
    let wide = 2.0 * lf.ln().sqrt() / lf.sqrt();
    let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inside, mut inside_wide) = (0usize, 0usize);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let mut worst: f64 = 0.0;
        for _ in 0..l {
            let s: f64 = (0..b).map(|_| normal.sample(&mut rng)).sum();
            worst = worst.max(s.abs());
            sum += s;
            sum_sq += s * s;
        }
        inside += usize::from(worst <= band);
        inside_wide += usize::from(worst <= wide);
    }
    let m = (trials * l) as f64;
    let mean = sum / m;
    ConcentrationReport {
        l,
        d,
        trials,
        band,
        fraction: inside as f64 / trials as f64,
        floor: 1.0 - 4.0 / (lf * lf),
        variance: (sum_sq - m * mean * mean) / (m - 1.0),
        fraction_sqrt_band: inside_wide as f64 / trials as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_hand_values() {
        let t = tail_check(1.0, 1.0);
        assert!((t.exact - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((t.upper - (-0.5f64).exp()).abs() < 1e-15);
        assert!(t.upper_holds());
        let t = tail_check(3.0, 1.0);
        assert!((t.exact - 0.001_349_898_031_630_1).abs() < 1e-12);
        assert!(t.upper_holds());
    }

    #[test]
    fn wide_sigma_limit() {
        let t = tail_check(1.0, 1e6);
        assert!((t.exact - 0.5).abs() < 1e-6);
        assert!((t.upper - 1.0).abs() < 1e-6);
        // the stated lower bound then exceeds the tail
        assert!(!t.lower_holds());
    }

    #[test]
    fn smallest_blocks() {
        let p = ModelParams::new(20, 10, 10, 2.0, 0.01).unwrap();
        let r = init_concentration_mc(&p, 10_000, 3);
        assert!((r.variance * 10.0 - 1.0).abs() < 0.05);
        assert!(r.fraction >= 0.0 && r.fraction <= r.fraction_sqrt_band);
    }

    #[test]
    fn seeded_runs_repeat() {
        let p = ModelParams::new(20, 100, 10, 2.0, 0.01).unwrap();
        assert_eq!(init_concentration_mc(&p, 10_000, 9), init_concentration_mc(&p, 10_000, 9));
    }

    proptest! {
        #[test]
        fn upper_bound_always_holds(a in 1e-3f64..8.0, sigma in 1e-2f64..100.0) {
            let t = tail_check(a, sigma);
            prop_assert!(t.upper_holds());
        }

        #[test]
        fn lower_bound_holds_for_unit_sigma(a in 1e-3f64..5.0) {
            let t = tail_check(a, 1.0);
            prop_assert!(t.half_lower_holds());
        }
    }
}
