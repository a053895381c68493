//! Flight-path corridors from radar tracks.
//!
//! The pipeline clusters departure and approach trajectories per runway,
//! fits a basis-function Gaussian model to each cluster, and replaces every
//! cluster by a handful of weighted representative trajectories whose
//! ground proximity footprint approximates that of the original traffic.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod error;
pub mod footprint;
pub mod gp;
pub mod par;
pub mod representative;
pub mod synth;
pub mod track;

pub use error::{Error, Result};
pub use par::Exec;
