//! Dense f64 matrices and a reverse-mode gradient tape sized for
//! training sequence models on windows of at most a few hundred steps.

mod grad_check;
mod graph;
mod matrix;
mod params;

pub use grad_check::grad_check;
pub use graph::{Graph, NodeId, PROB_CLAMP};
pub use matrix::{sigmoid, Axis, MathError, Matrix};
pub use params::{ParamId, ParamSet, Parameter};
