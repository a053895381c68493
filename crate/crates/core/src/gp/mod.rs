//! Per-corridor probabilistic trajectory model.
//!
//! Every coordinate of a trajectory is a weighted sum of J scalar basis
//! functions of normalised time; the weights are Gaussian across the
//! trajectories of a cluster. Fitting is by expectation-maximisation.

mod basis;
mod em;
mod model;
mod normalize;

pub use basis::BasisSet;
pub use em::{
    e_step, em_fit, free_energy, m_step, marginal_neg_log_likelihood, neg_log_likelihood, Design,
    EmFitter, EmOutcome, EmSettings, Expectation, MStep, ModelParams, MIN_NOISE_VARIANCE,
};
pub(crate) use model::check_tau;
pub use model::{GaussianSection, TrajectoryModel};
pub use normalize::{normalize_cluster, NormalizationTransform, NormalizedTrack};
