//! Checkpoint curves and the transfer early-stopping experiment.

use super::data::RealDataset;
use super::decode::{linear_probe, ProbeConfig, ProbeDimension};
use super::f0::{train_f0, Checkpoint, TrainConfig};
use crate::table::{Cell, Table};

pub const CURVE_COLUMNS: [&str; 5] = ["t", "train_acc", "test_acc", "recon_loss", "probe_acc"];

/// Raw checkpoint metrics plus `_norm` copies of the metric columns.
pub fn checkpoint_table(checkpoints: &[Checkpoint]) -> Table {
    let mut t = Table::new(CURVE_COLUMNS);
    for c in checkpoints {
        t.push(vec![Cell::from(c.t), c.train_acc.into(), c.test_acc.into(), c.recon_loss.into(), c.probe_acc.into()])
            .expect("fixed width");
    }
    let mut names = vec!["train_acc", "test_acc", "recon_loss"];
    if checkpoints.iter().all(|c| c.probe_acc.is_some()) {
        names.push("probe_acc");
    }
    t.add_normalized(&names).expect("numeric columns");
    t
}

/// Trains on the source task and probes every checkpoint on the probe task.
pub fn transfer_curve(
    source_train: &RealDataset,
    source_test: &RealDataset,
    probe_train: &RealDataset,
    probe_test: &RealDataset,
    cfg: &TrainConfig,
    probe: &ProbeConfig,
) -> Result<Vec<Checkpoint>, ProbeDimension> {
    let mut ck = train_f0(source_train, source_test, cfg);
    for c in ck.iter_mut() {
        c.probe_acc = Some(linear_probe(&c.model, probe_train, probe_test, probe)?);
    }
    Ok(ck)
}

/// Index of the first maximum; NaN never wins.
fn argmax_by(v: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.enumerate() {
        if best.is_none_or(|(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best.map(|b| b.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSummary {
    pub best_probe_t: usize,
    pub best_probe_acc: f64,
    pub source_acc_at_best: f64,
    pub max_source_acc: f64,
}

impl TransferSummary {
    /// The probe peaks where the source model is still short of its best.
    pub fn early_stop(&self, margin: f64) -> bool {
        self.source_acc_at_best <= self.max_source_acc - margin
    }
}

pub fn summarize_transfer(ck: &[Checkpoint]) -> Option<TransferSummary> {
    let i = argmax_by(ck.iter().map(|c| c.probe_acc.unwrap_or(f64::NAN)))?;
    let max_source_acc = ck.iter().map(|c| c.test_acc).fold(f64::NEG_INFINITY, f64::max);
    Some(TransferSummary {
        best_probe_t: ck[i].t,
        best_probe_acc: ck[i].probe_acc?,
        source_acc_at_best: ck[i].test_acc,
        max_source_acc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSummary {
    pub t_min_recon: usize,
    pub min_recon: f64,
    /// Minimum strictly between the first and last checkpoint.
    pub interior_minimum: bool,
    /// Largest drop of test accuracy below its running maximum.
    pub max_accuracy_drop: f64,
}

impl PhaseSummary {
    pub fn accuracy_monotone(&self, tol: f64) -> bool {
        self.max_accuracy_drop <= tol
    }
}

pub fn summarize_phases(ck: &[Checkpoint]) -> PhaseSummary {
    let i = argmax_by(ck.iter().map(|c| -c.recon_loss)).unwrap_or(0);
    let mut run = f64::NEG_INFINITY;
    let mut drop: f64 = 0.0;
    for c in ck {
        run = run.max(c.test_acc);
        drop = drop.max(run - c.test_acc);
    }
    PhaseSummary {
        t_min_recon: ck[i].t,
        min_recon: ck[i].recon_loss,
        interior_minimum: i > 0 && i + 1 < ck.len(),
        max_accuracy_drop: drop,
    }
}
