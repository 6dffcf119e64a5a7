//! Numerical certification of the asymptotic claims about the reduced
//! dynamics: phase shape, stage-wise error orders, the crossing window,
//! series expansions and random-initialization concentration.

mod bounds;
mod concentration;
mod crossing;
mod phases;
mod series;

pub use bounds::{certify_stage_bounds, loss_at_f, on_path_state, saturation_check, SaturationCheck, STABILITY_BAND};
pub use concentration::{gaussian_tail_bounds, init_concentration_mc, tail_check, ConcentrationReport, TailCheck};
pub use crossing::{certify_crossing_window, crossing_suite, t_star, CrossingPoint};
pub use phases::{detect_phases, loss_curve, PhaseReport, PhaseVerdict, PHASE1_TOL};
pub use series::{series_residuals, Expansion, Regime, SeriesTerm};

use thiserror::Error;

use crate::model::ModelParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("trajectory ends at q_self_weak = {0}, below the 0.99 saturation floor")]
    TrajectoryTooShort(f64),
    #[error("inputs f={f}, u={u}, l={l} fall outside the {regime:?} regime")]
    RegimeViolation { regime: Regime, f: f64, u: f64, l: usize },
    #[error("empty parameter sweep")]
    EmptySweep,
}

/// One measured point of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub params: ModelParams,
    pub f: f64,
    pub measured: f64,
    pub predicted_scale: f64,
}

impl SweepPoint {
    pub fn ratio(&self) -> f64 {
        self.measured / self.predicted_scale
    }
}

/// Outcome of checking one asymptotic claim over a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub claim: String,
    pub sweep: Vec<SweepPoint>,
    pub fitted_constant: f64,
    pub max_ratio_deviation: f64,
    /// Largest tolerated `max_ratio_deviation`.
    pub band: f64,
    pub pass: bool,
    /// Free-form diagnostics, `;`-separated.
    pub note: String,
}
