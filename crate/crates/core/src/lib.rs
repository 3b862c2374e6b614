//! Knowledge-tracing engine: ingest per-student course outcomes, train
//! five sequence architectures (DKT, DKT+, DKVMN, SAKT, KQN) with a
//! shared reverse-mode gradient tape, and score next-outcome predictions
//! with confusion metrics and Mann-Whitney AUC.

pub mod data;
pub mod math;
pub mod metrics;
pub mod models;
pub mod synth;
pub mod train;

pub use math::{Matrix, ParamSet};
