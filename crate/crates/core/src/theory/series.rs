use super::TheoryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `f, u ∈ O(1/l)`.
    Small,
    /// `f ∈ [1/l, 1]`, `u ∈ O(f/l)`.
    Mid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Expansion {
    /// `e^{fk} − e^{ku}`
    StrongGap,
    /// `e^{f+ku} − e^{(k+1)u}`
    WeakGap,
    /// `e^{fk+u} − e^{f+ku}`
    MixedGap,
    /// `1/(e^f + l·e^{fu})`
    Normalizer,
    /// `e^{fu}`
    Product,
}

impl Expansion {
    pub const ALL: [Expansion; 5] =
        [Expansion::StrongGap, Expansion::WeakGap, Expansion::MixedGap, Expansion::Normalizer, Expansion::Product];

    pub fn id(self) -> &'static str {
        match self {
            Expansion::StrongGap => "exp(fk)-exp(ku)",
            Expansion::WeakGap => "exp(f+ku)-exp((k+1)u)",
            Expansion::MixedGap => "exp(fk+u)-exp(f+ku)",
            Expansion::Normalizer => "1/(exp(f)+l*exp(fu))",
            Expansion::Product => "exp(fu)",
        }
    }

    pub fn is_difference(self) -> bool {
        matches!(self, Expansion::StrongGap | Expansion::WeakGap | Expansion::MixedGap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm {
    pub expansion: Expansion,
    pub exact: f64,
    pub approx: f64,
    /// `|exact − approx| / |approx|`, 0 when both vanish.
    pub residual_ratio: f64,
}

const REGIME_SPAN: f64 = 10.0;

fn check(regime: Regime, f: f64, u: f64, l: usize) -> Result<(), TheoryError> {
    let lf = l as f64;
    let ok = match regime {
        Regime::Small => (f * lf).abs() <= REGIME_SPAN && (u * lf).abs() <= REGIME_SPAN,
        Regime::Mid => f >= 1.0 / lf && f <= 1.0 && u.abs() <= REGIME_SPAN * f / lf,
    };
    if ok {
        Ok(())
    } else {
        Err(TheoryError::RegimeViolation { regime, f, u, l })
    }
}

/// Exact value, leading-order approximation and their relative gap for
/// each expansion used in the stage analysis.
pub fn series_residuals(f: f64, u: f64, k: f64, l: usize, regime: Regime) -> Result<Vec<SeriesTerm>, TheoryError> {
    check(regime, f, u, l)?;
    let lf = l as f64;
    // exp_m1 keeps the differences accurate when f ≈ u
    let gap = |a: f64, b: f64| b.exp() * (a - b).exp_m1();
    Ok(Expansion::ALL
        .iter()
        .map(|&e| {
            let exact = match e {
                Expansion::StrongGap => gap(f * k, k * u),
                Expansion::WeakGap => gap(f + k * u, (k + 1.0) * u),
                Expansion::MixedGap => gap(f * k + u, f + k * u),
                Expansion::Normalizer => 1.0 / (f.exp() + lf * (f * u).exp()),
                Expansion::Product => (f * u).exp(),
            };
            let approx = match (regime, e) {
                (Regime::Small, Expansion::StrongGap) => k * (f - u),
                (Regime::Small, Expansion::WeakGap) => f - u,
                (Regime::Small, Expansion::MixedGap) => (k - 1.0) * (f - u),
                (Regime::Mid, Expansion::StrongGap) => (f * k).exp_m1(),
                (Regime::Mid, Expansion::WeakGap) => f.exp_m1(),
                (Regime::Mid, Expansion::MixedGap) => gap(f * k, f),
                (_, Expansion::Normalizer) => 1.0 / lf,
                (_, Expansion::Product) => 1.0,
            };
            let residual_ratio = if approx == 0.0 && exact == 0.0 { 0.0 } else { ((exact - approx) / approx).abs() };
            SeriesTerm { expansion: e, exact, approx, residual_ratio }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_arguments_cancel() {
        let t = series_residuals(0.01, 0.01, 2.0, 100, Regime::Small).unwrap();
        assert_eq!(t[0].exact, 0.0);
        assert_eq!(t[0].approx, 0.0);
        assert_eq!(t[0].residual_ratio, 0.0);
    }

    #[test]
    fn small_regime_scale() {
        let t = series_residuals(2e-3, 1e-3, 2.0, 1000, Regime::Small).unwrap();
        // ratio ≈ k·u + k(f−u)/2
        assert!((t[0].residual_ratio - 3e-3).abs() < 2e-4, "{}", t[0].residual_ratio);
    }

    #[test]
    fn quadrupling_l_shrinks_ratio() {
        for regime in [Regime::Small, Regime::Mid] {
            let (fl, ul) = match regime {
                Regime::Small => (2.0, 1.0),
                Regime::Mid => (0.5, 0.3),
            };
            let at = |l: usize| {
                let (f, u) = match regime {
                    Regime::Small => (fl / l as f64, ul / l as f64),
                    Regime::Mid => (fl, ul * fl / l as f64),
                };
                series_residuals(f, u, 3.0, l, regime).unwrap()
            };
            let (a, b) = (at(1000), at(4000));
            for i in 0..3 {
                let shrink = a[i].residual_ratio / b[i].residual_ratio;
                assert!((shrink / 4.0 - 1.0).abs() < 0.3, "{regime:?} {i} {shrink}");
            }
        }
    }

    #[test]
    fn regime_guard() {
        assert!(matches!(series_residuals(0.5, 0.0, 2.0, 100, Regime::Small), Err(TheoryError::RegimeViolation { .. })));
        assert!(matches!(series_residuals(2.0, 0.0, 2.0, 100, Regime::Mid), Err(TheoryError::RegimeViolation { .. })));
        assert!(series_residuals(0.5, 0.01, 2.0, 100, Regime::Mid).is_ok());
    }
}
