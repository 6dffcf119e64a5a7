use super::{BoundCertificate, SweepPoint};
use crate::dynamics::initial_state;
use crate::dynamics::step;
use crate::model::{class_probs, ModelParams};

/// Lower and upper window multipliers of `t*`.
pub const WINDOW: (f64, f64) = (2.0, 12.0);

/// Largest `q_self_weak` under which the window is asserted.
pub const SIDE_CONDITION: f64 = 2.0 / 3.0;

/// `t* = 2l²(f − 1/l)/(λd(k+1))`.
pub fn t_star(params: &ModelParams, f_target: f64) -> f64 {
    let l = params.l as f64;
    2.0 * l * l * (f_target - 1.0 / l) / (params.lambda * params.d as f64 * (params.k + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingPoint {
    pub params: ModelParams,
    pub f_target: f64,
    pub t_star: f64,
    pub crossing: Option<usize>,
    /// Largest `q_self_weak` seen up to `12·t*`.
    pub max_q_self_weak: f64,
}

impl CrossingPoint {
    pub fn side_condition_held(&self) -> bool {
        self.max_q_self_weak <= SIDE_CONDITION
    }

    pub fn ratio(&self) -> Option<f64> {
        self.crossing.map(|t| t as f64 / self.t_star)
    }

    pub fn in_window(&self, lo: f64, hi: f64) -> bool {
        match self.crossing {
            Some(t) => (t as f64) >= lo * self.t_star && (t as f64) <= hi * self.t_star,
            None => false,
        }
    }
}

fn measure(params: &ModelParams, f_target: f64) -> CrossingPoint {
    let ts = t_star(params, f_target);
    let horizon = (WINDOW.1 * ts).ceil() as usize + 1;
    let mut s = initial_state(params);
    let mut q = class_probs(&s, params);
    let mut crossing = None;
    let mut max_q = q.q_self_weak;
    // past the horizon only keep stepping to locate a late crossing
    while crossing.is_none() || s.t < horizon {
        if crossing.is_none() && s.f >= f_target {
            crossing = Some(s.t);
        }
        if s.t <= horizon {
            max_q = max_q.max(q.q_self_weak);
        }
        if s.t >= 4 * horizon {
            break;
        }
        s = step(&s, params);
        q = class_probs(&s, params);
    }
    CrossingPoint { params: *params, f_target, t_star: ts, crossing, max_q_self_weak: max_q }
}

/// Crossing iterations of `f_target(params)` against `[2t*, 12t*]`. Points
/// whose run violates the side condition are reported but not judged.
pub fn certify_crossing_window(params_sweep: &[ModelParams], f_target: impl Fn(&ModelParams) -> f64) -> (BoundCertificate, Vec<CrossingPoint>) {
    let points: Vec<CrossingPoint> = params_sweep.iter().map(|p| measure(p, f_target(p))).collect();
    let judged: Vec<&CrossingPoint> = points.iter().filter(|c| c.side_condition_held()).collect();
    let pass = !judged.is_empty() && judged.iter().all(|c| c.in_window(WINDOW.0, WINDOW.1));
    let ratios: Vec<f64> = points.iter().filter_map(CrossingPoint::ratio).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let in_corrected = judged.iter().filter(|c| c.in_window(1.0, 6.0)).count();
    let skipped = points.len() - judged.len();
    // midpoint of the window in log scale as the nominal constant
    let nominal = (WINDOW.0 * WINDOW.1).sqrt();
    let dev = ratios.iter().map(|r| (r / nominal).ln().abs()).fold(0.0, f64::max);
    let cert = BoundCertificate {
        claim: format!("crossing of f_target within [{}t*, {}t*]", WINDOW.0, WINDOW.1),
        sweep: points
            .iter()
            .map(|c| SweepPoint {
                params: c.params,
                f: c.f_target,
                measured: c.crossing.map_or(f64::NAN, |t| t as f64),
                predicted_scale: c.t_star,
            })
            .collect(),
        fitted_constant: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
        max_ratio_deviation: dev,
        band: (WINDOW.1 / WINDOW.0).sqrt().ln(),
        pass,
        note: format!(
            "t/t* in [{lo:.4}, {hi:.4}]; {in_corrected}/{} inside [t*, 6t*]; {skipped} skipped by side condition",
            judged.len()
        ),
    };
    (cert, points)
}

/// Ten small-step problems used for the window check.
pub fn crossing_suite() -> Vec<ModelParams> {
    [
        (10, 100, 2.0, 1e-3),
        (10, 100, 3.0, 1e-3),
        (10, 200, 2.0, 1e-3),
        (10, 100, 4.0, 5e-4),
        (20, 400, 2.0, 1e-3),
        (30, 300, 2.0, 2e-3),
        (50, 1000, 2.0, 1e-2),
        (100, 1000, 2.0, 1e-2),
        (100, 2000, 3.0, 1e-2),
        (1000, 10_000, 2.0, 1e-2),
    ]
    .into_iter()
    .map(|(l, d, k, lr)| ModelParams::new(2 * l, d, l, k, lr).expect("valid suite entry"))
    .collect()
}
