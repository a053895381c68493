use crate::track::Trajectory;

/// Concatenated east ‖ north ‖ altitude blocks of a resampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn steps(&self) -> usize {
        self.0.len() / 3
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// One of the three coordinate blocks (0 = east, 1 = north, 2 = altitude).
    pub fn block(&self, dim: usize) -> &[f64] {
        let s = self.steps();
        &self.0[dim * s..(dim + 1) * s]
    }
}

/// Resample `t` to `steps` samples spaced uniformly in point index, with
/// linear interpolation between neighbouring points.
///
/// Panics if `steps < 2`.
pub fn resample(t: &Trajectory, steps: usize) -> FeatureVector {
    assert!(steps >= 2, "resample needs at least 2 steps");
    let pts = t.points();
    let last = (pts.len() - 1) as f64;
    let mut values = vec![0.0; 3 * steps];
    for i in 0..steps {
        let pos = i as f64 * last / (steps - 1) as f64;
        let lo = (pos.floor() as usize).min(pts.len() - 2);
        let frac = pos - lo as f64;
        let a = pts[lo].position();
        let b = pts[lo + 1].position();
        for d in 0..3 {
            values[d * steps + i] = if frac == 0.0 {
                a[d]
            } else if frac == 1.0 {
                b[d]
            } else {
                a[d] + frac * (b[d] - a[d])
            };
        }
    }
    FeatureVector(values)
}
