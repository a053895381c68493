//! Grouping trajectories into flight-path corridors: index-uniform
//! resampling, standardisation, PCA, then DBSCAN with pruning of small
//! clusters.

mod dbscan;
mod pca;
mod resample;

pub use dbscan::{dbscan, dbscan_with, neighborhoods, ClusterLabeling, Label};
pub use pca::{pca_fit, PcaModel};
pub use resample::{resample, FeatureVector};

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::par::Exec;
use crate::track::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringParams {
    pub resample_steps: usize,
    pub variance_retained: f64,
    pub eps: f64,
    pub min_pts: usize,
    pub min_cluster_size: usize,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            resample_steps: 30,
            variance_retained: 0.95,
            eps: 0.20,
            min_pts: 5,
            min_cluster_size: 25,
        }
    }
}

impl ClusteringParams {
    pub fn validate(&self) -> Result<()> {
        if self.resample_steps < 2 {
            return Err(invalid("resample_steps", "must be at least 2"));
        }
        if !(self.variance_retained > 0.0 && self.variance_retained <= 1.0) {
            return Err(invalid("variance_retained", "must be in (0, 1]"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid("eps", "must be positive"));
        }
        if self.min_pts == 0 {
            return Err(invalid("min_pts", "must be positive"));
        }
        if self.min_cluster_size == 0 {
            return Err(invalid("min_cluster_size", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// Input indices per surviving cluster, each sorted ascending.
    pub clusters: Vec<Vec<usize>>,
    /// DBSCAN noise plus members of pruned clusters, sorted ascending.
    pub outliers: Vec<usize>,
    /// Final labels after pruning, one per input trajectory.
    pub labeling: ClusterLabeling,
    /// `None` when fewer than two trajectories were supplied.
    pub pca: Option<PcaModel>,
}

/// Standardise each spatial coordinate (the east, north and altitude
/// blocks, pooled over steps and trajectories) to zero mean and unit
/// standard deviation, in place.
pub fn standardize(features: &mut DMatrix<f64>, steps: usize) {
    let n = features.nrows();
    if n == 0 {
        return;
    }
    for dim in 0..3 {
        let cols = dim * steps..(dim + 1) * steps;
        let count = (n * steps) as f64;
        let mean = cols.clone().map(|c| features.column(c).sum()).sum::<f64>() / count;
        let var = cols
            .clone()
            .map(|c| {
                features
                    .column(c)
                    .iter()
                    .map(|v| (v - mean).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / count;
        let std = var.sqrt();
        let div = if std < 1e-12 { 1.0 } else { std };
        for c in cols {
            for v in features.column_mut(c).iter_mut() {
                *v = (*v - mean) / div;
            }
        }
    }
}

pub fn cluster_trajectories(
    trajectories: &[Trajectory],
    params: &ClusteringParams,
) -> Result<ClusteringResult> {
    cluster_trajectories_with(trajectories, params, Exec::default())
}

/// resample → standardise → PCA → DBSCAN → prune clusters smaller than
/// `min_cluster_size` into the outliers.
pub fn cluster_trajectories_with(
    trajectories: &[Trajectory],
    params: &ClusteringParams,
    exec: Exec,
) -> Result<ClusteringResult> {
    params.validate()?;
    let n = trajectories.len();
    let steps = params.resample_steps;
    if n < 2 {
        return Ok(ClusteringResult {
            clusters: Vec::new(),
            outliers: (0..n).collect(),
            labeling: ClusterLabeling {
                labels: vec![Label::Noise; n],
            },
            pca: None,
        });
    }

    let rows = exec.map(trajectories, |t| resample(t, steps).into_inner());
    let mut features = DMatrix::from_fn(n, 3 * steps, |i, j| rows[i][j]);
    standardize(&mut features, steps);

    let pca = pca_fit(&features, params.variance_retained)?;
    let projected = exec.map_range(n, |i| {
        let row: Vec<f64> = features.row(i).iter().copied().collect();
        pca.project(&row)
    });
    let reduced = DMatrix::from_fn(n, pca.dims(), |i, j| projected[i][j]);

    let raw = dbscan_with(&reduced, params.eps, params.min_pts, exec);
    Ok(prune(raw, params.min_cluster_size, Some(pca)))
}

fn prune(raw: ClusterLabeling, min_cluster_size: usize, pca: Option<PcaModel>) -> ClusteringResult {
    let members = raw.members();
    let mut remap = vec![None; members.len()];
    let mut clusters = Vec::new();
    for (k, m) in members.into_iter().enumerate() {
        if m.len() >= min_cluster_size {
            remap[k] = Some(clusters.len());
            clusters.push(m);
        }
    }
    let labels: Vec<Label> = raw
        .labels
        .iter()
        .map(|l| match l.cluster().and_then(|k| remap[k]) {
            Some(k) => Label::Cluster(k),
            None => Label::Noise,
        })
        .collect();
    let labeling = ClusterLabeling { labels };
    ClusteringResult {
        outliers: labeling.noise(),
        clusters,
        labeling,
        pca,
    }
}

/// Cluster-assignment CSV: `traj_id,cluster` with `noise` for outliers.
pub fn write_assignments<W: std::io::Write>(
    out: W,
    trajectories: &[Trajectory],
    labels: &[Option<usize>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["traj_id", "cluster"])?;
    for (t, l) in trajectories.iter().zip(labels) {
        let c = l.map_or_else(|| "noise".to_string(), |k| k.to_string());
        w.write_record([t.id(), c.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
