use crate::error::{Error, Result};
use crate::track::Trajectory;

/// Per-dimension affine map between metres and the unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub offset: [f64; 3],
    /// Each entry > 0.
    pub scale: [f64; 3],
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        Self {
            offset: [0.0; 3],
            scale: [1.0; 3],
        }
    }

    pub fn normalize(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|d| (p[d] - self.offset[d]) / self.scale[d])
    }

    pub fn denormalize(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|d| self.offset[d] + self.scale[d] * p[d])
    }
}

/// A trajectory in normalised coordinates with its normalised times.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrack {
    pub id: String,
    /// Strictly increasing, from 0 to 1.
    pub taus: Vec<f64>,
    pub coords: Vec<[f64; 3]>,
}

impl NormalizedTrack {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

/// Map every trajectory of a cluster into the unit cube spanned by the
/// cluster's per-dimension extent, and give each point its normalised time
/// `(t - t_first) / (t_last - t_first)`.
pub fn normalize_cluster(
    cluster: &[Trajectory],
) -> Result<(Vec<NormalizedTrack>, NormalizationTransform)> {
    if cluster.is_empty() {
        return Err(Error::InvalidParameter {
            name: "cluster",
            message: "empty cluster".into(),
        });
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for t in cluster {
        if !(t.duration() > 0.0) {
            return Err(Error::InvalidTrajectory {
                id: t.id().to_string(),
                message: "zero duration".into(),
            });
        }
        for p in t.points() {
            for (d, v) in p.position().into_iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
    }
    let transform = NormalizationTransform {
        offset: lo,
        scale: std::array::from_fn(|d| {
            let s = hi[d] - lo[d];
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }),
    };
    let tracks = cluster
        .iter()
        .map(|t| {
            let t0 = t.first().time;
            let span = t.duration();
            let n = t.len();
            let taus = t
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if i + 1 == n {
                        1.0
                    } else {
                        (p.time - t0) / span
                    }
                })
                .collect();
            let coords = t
                .points()
                .iter()
                .map(|p| transform.normalize(p.position()))
                .collect();
            NormalizedTrack {
                id: t.id().to_string(),
                taus,
                coords,
            }
        })
        .collect();
    Ok((tracks, transform))
}
