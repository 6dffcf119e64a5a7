use super::TheoryError;
use crate::dynamics::Trajectory;
use crate::model::{ClassProbs, ModelParams};
use crate::recon::{error_breakdown, fit_gj_or_t0};

/// Relative distance from `R(0)` still counted as the flat first phase.
pub const PHASE1_TOL: f64 = 0.02;

/// Saturation floor on `q_self_weak` at the end of an analyzed trajectory.
pub const SATURATION_FLOOR: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseVerdict {
    ThreePhases,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub t_min_error: usize,
    pub r_initial: f64,
    pub r_min: f64,
    pub r_final: f64,
    pub phase1_end: usize,
    pub phase2_end: usize,
    pub t_final: usize,
    pub verdict: PhaseVerdict,
}

/// Per-step reconstruction error: the two-point fit, or the constant one
/// while the strong anchors coincide.
pub fn loss_at(probs: &ClassProbs, params: &ModelParams) -> f64 {
    error_breakdown(&fit_gj_or_t0(probs, params), probs, params).total_paper
}

pub fn loss_curve(trajectory: &Trajectory) -> Vec<f64> {
    trajectory.probs.iter().map(|q| loss_at(q, &trajectory.params)).collect()
}

pub fn detect_phases(trajectory: &Trajectory, params: &ModelParams) -> Result<PhaseReport, TheoryError> {
    let r = loss_curve(trajectory);
    let states = &trajectory.states;
    let frozen = states.iter().all(|s| s.f == states[0].f && s.u == states[0].u);
    let (_, last_q) = trajectory.last();
    if !frozen && last_q.q_self_weak < SATURATION_FLOOR {
        return Err(TheoryError::TrajectoryTooShort(last_q.q_self_weak));
    }
    debug_assert_eq!(trajectory.params.l, params.l);
    let r0 = r[0];
    let (mut i_min, mut r_min) = (0, r0);
    for (i, &v) in r.iter().enumerate() {
        if v < r_min {
            i_min = i;
            r_min = v;
        }
    }
    let phase1 = r.iter().take_while(|&&v| (v - r0).abs() <= PHASE1_TOL * r0.abs()).count().max(1) - 1;
    let last = r.len() - 1;
    let r_final = r[last];
    let three = !frozen && r0 > r_min && r_final > r_min && i_min > 0 && i_min < last;
    Ok(PhaseReport {
        t_min_error: states[i_min].t,
        r_initial: r0,
        r_min,
        r_final,
        phase1_end: states[phase1].t,
        phase2_end: states[i_min].t,
        t_final: states[last].t,
        verdict: if three { PhaseVerdict::ThreePhases } else { PhaseVerdict::Degenerate },
    })
}
