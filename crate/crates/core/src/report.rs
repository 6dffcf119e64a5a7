//! Table builders for the artifacts written by the command-line tool.

use crate::dynamics::Trajectory;
use crate::model::ModelParams;
use crate::oracle::OracleComparison;
use crate::recon::{error_breakdown, fit_gj_or_t0, fit_optimal};
use crate::table::{Cell, Table};
use crate::theory::{BoundCertificate, PhaseReport, PhaseVerdict};

pub const SIMULATE_COLUMNS: [&str; 14] = [
    "t",
    "f",
    "u",
    "q_self_weak",
    "q_self_strong",
    "q_cross_weak",
    "q_cross_strong",
    "r1",
    "rk",
    "r0_weak",
    "r0_strong",
    "total_paper_gj",
    "total_exact_gj",
    "total_exact_opt",
];

/// Every `stride`-th state of the trajectory, always including the last.
pub fn simulate_table(traj: &Trajectory, stride: usize) -> Table {
    let stride = stride.max(1);
    let mut t = Table::new(SIMULATE_COLUMNS);
    let last = traj.len() - 1;
    for (i, (s, q)) in traj.states.iter().zip(&traj.probs).enumerate() {
        if i % stride != 0 && i != last {
            continue;
        }
        let gj = error_breakdown(&fit_gj_or_t0(q, &traj.params), q, &traj.params);
        let opt = error_breakdown(&fit_optimal(q, &traj.params), q, &traj.params);
        t.push(vec![
            Cell::from(s.t),
            s.f.into(),
            s.u.into(),
            q.q_self_weak.into(),
            q.q_self_strong.into(),
            q.q_cross_weak.into(),
            q.q_cross_strong.into(),
            gj.r1.into(),
            gj.rk.into(),
            gj.r0_weak.into(),
            gj.r0_strong.into(),
            gj.total_paper.into(),
            gj.total_exact.into(),
            opt.total_exact.into(),
        ])
        .expect("fixed width");
    }
    t
}

pub fn oracle_table(cmp: &OracleComparison) -> Table {
    let mut t = Table::new(["t", "f_oracle", "u_oracle", "f_reduced", "u_reduced", "abs_dev"]);
    for &(step, fo, uo, fr, ur) in &cmp.rows {
        let dev = (fo - fr).abs().max((uo - ur).abs());
        t.push(vec![step.into(), fo.into(), uo.into(), fr.into(), ur.into(), dev.into()]).expect("fixed width");
    }
    t
}

fn params_cells(p: &ModelParams) -> Vec<Cell> {
    vec![p.n.into(), p.d.into(), p.l.into(), p.k.into(), p.lambda.into()]
}

pub fn phases_table(reports: &[(ModelParams, PhaseReport)]) -> Table {
    let mut t = Table::new([
        "n", "d", "l", "k", "lambda", "t_min_error", "r_initial", "r_min", "r_final", "phase1_end", "phase2_end", "t_final",
        "verdict",
    ]);
    for (p, r) in reports {
        let mut row = params_cells(p);
        let verdict = match r.verdict {
            PhaseVerdict::ThreePhases => "ThreePhases",
            PhaseVerdict::Degenerate => "Degenerate",
        };
        row.extend([
            Cell::from(r.t_min_error),
            r.r_initial.into(),
            r.r_min.into(),
            r.r_final.into(),
            r.phase1_end.into(),
            r.phase2_end.into(),
            r.t_final.into(),
            verdict.into(),
        ]);
        t.push(row).expect("fixed width");
    }
    t
}

pub fn certificates_table(certs: &[BoundCertificate]) -> Table {
    let mut t = Table::new(["claim", "points", "fitted_constant", "max_ratio_deviation", "band", "pass", "note"]);
    for c in certs {
        t.push(vec![
            c.claim.as_str().into(),
            c.sweep.len().into(),
            c.fitted_constant.into(),
            c.max_ratio_deviation.into(),
            c.band.into(),
            c.pass.into(),
            c.note.as_str().into(),
        ])
        .expect("fixed width");
    }
    t
}

pub fn sweep_table(certs: &[BoundCertificate]) -> Table {
    let mut t = Table::new(["claim", "n", "d", "l", "k", "lambda", "f", "measured", "predicted_scale", "ratio"]);
    for c in certs {
        for s in &c.sweep {
            let mut row = vec![Cell::from(c.claim.as_str())];
            row.extend(params_cells(&s.params));
            row.extend([Cell::from(s.f), s.measured.into(), s.predicted_scale.into(), s.ratio().into()]);
            t.push(row).expect("fixed width");
        }
    }
    t
}
