//! Closed-form weight-sum update of full-batch gradient descent under the
//! class and attribute symmetries of the synthetic problem.

use crate::model::{class_probs, ClassProbs, Init, ModelParams, SymState};
use crate::oracle::WeightMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub states: Vec<SymState>,
    pub probs: Vec<ClassProbs>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> (&SymState, &ClassProbs) {
        (self.states.last().unwrap(), self.probs.last().unwrap())
    }

    fn push(&mut self, s: SymState) {
        self.probs.push(class_probs(&s, &self.params));
        self.states.push(s);
    }
}

/// One gradient-descent iteration on `(f, u)`.
pub fn step(state: &SymState, params: &ModelParams) -> SymState {
    let q = class_probs(state, params);
    step_with(state, &q, params)
}

fn step_with(state: &SymState, q: &ClassProbs, params: &ModelParams) -> SymState {
    let z = params.step_scale();
    let k = params.k;
    let miss_weak = 1.0 - q.q_self_weak;
    let miss_strong = 1.0 - q.q_self_strong;
    let others = (params.l - 1) as f64;
    SymState {
        t: state.t + 1,
        f: state.f + z * (miss_weak + k * miss_strong),
        u: state.u - z * (miss_weak + k * miss_strong) / others,
    }
}

/// Initial reduced state. Random init is reduced by averaging the sampled
/// block sums over the equivalent class pairs.
pub fn initial_state(params: &ModelParams) -> SymState {
    match params.init {
        Init::Deterministic => SymState::initial(params),
        Init::Random { .. } => WeightMatrix::init(params).averaged_sums(params),
    }
}

/// Trajectory of `t_max + 1` states starting at `t = 0`.
///
/// Panics if `t_max == 0`.
pub fn simulate(params: &ModelParams, t_max: usize) -> Trajectory {
    assert!(t_max >= 1, "simulate needs t_max >= 1");
    let mut traj = Trajectory {
        params: *params,
        states: Vec::with_capacity(t_max + 1),
        probs: Vec::with_capacity(t_max + 1),
    };
    traj.push(initial_state(params));
    for _ in 0..t_max {
        let (s, q) = traj.last();
        let next = step_with(s, q, params);
        traj.push(next);
    }
    traj
}

/// Simulate until `stop` holds on the newest state or `max_steps` iterations
/// have been taken.
pub fn simulate_until<F>(params: &ModelParams, max_steps: usize, mut stop: F) -> Trajectory
where
    F: FnMut(&SymState, &ClassProbs) -> bool,
{
    let mut traj = Trajectory { params: *params, states: Vec::new(), probs: Vec::new() };
    traj.push(initial_state(params));
    for _ in 0..max_steps {
        let (s, q) = traj.last();
        if stop(s, q) {
            break;
        }
        let next = step_with(s, q, params);
        traj.push(next);
    }
    traj
}

/// Smallest `t` with `f ≥ f_target`.
///
/// Panics if `f_target < 1/l`, below the deterministic starting point.
pub fn first_crossing(trajectory: &Trajectory, f_target: f64) -> Option<usize> {
    let floor = trajectory.params.uniform();
    assert!(f_target >= floor, "f_target {f_target} below 1/l = {floor}");
    trajectory.states.iter().find(|s| s.f >= f_target).map(|s| s.t)
}

/// Steps needed for `f` to reach `f_target` without storing the run.
pub fn crossing_iteration(params: &ModelParams, f_target: f64, max_steps: usize) -> Option<usize> {
    let mut s = initial_state(params);
    for _ in 0..=max_steps {
        if s.f >= f_target {
            return Some(s.t);
        }
        s = step(&s, params);
    }
    None
}
