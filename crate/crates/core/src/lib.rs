//! Reconstruction-loss phases of a single-layer softmax classifier.
//!
//! The theory track works on a synthetic weak/strong-feature problem whose
//! gradient-descent dynamics collapse to two scalars ([`SymState`]). A
//! brute-force weight-matrix oracle ([`oracle`]) checks that reduction, the
//! [`recon`] module fits linear reconstruction functions to the resulting
//! softmax outputs, and [`theory`] certifies the asymptotic claims numerically.
//! [`empirical`] repeats the protocol with a dense layer trained on MNIST-style
//! data.

pub mod dynamics;
pub mod empirical;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod plot;
pub mod recon;
pub mod report;
pub mod table;
pub mod theory;

pub use dynamics::{first_crossing, simulate, simulate_until, step, Trajectory};
pub use model::{class_probs, generate_dataset, ClassProbs, Dataset, Init, ModelParams, ParamError, SymState};
pub use oracle::{OracleError, WeightMatrix};
pub use recon::{error_breakdown, fit_gj, fit_optimal, fit_t0, ErrorBreakdown, FitKind, ReconFit, Weighting};
pub use table::Table;
