//! Desk-scale empirical track: F0 trained on image data, per-checkpoint
//! linear decoding and linear probing.

pub mod data;
pub mod decode;
pub mod f0;
pub mod transfer;

pub use data::{data_root, load_cifar10, load_idx, load_named, DataError, RealDataset, Split};
pub use decode::{fit_decoder, linear_probe, LinearDecoder, ProbeConfig};
pub use f0::{train_f0, Checkpoint, Loss, Schedule, TrainConfig, F0};
pub use transfer::{checkpoint_table, summarize_phases, summarize_transfer, transfer_curve, PhaseSummary, TransferSummary};
