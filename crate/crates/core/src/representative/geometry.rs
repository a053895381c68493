//! Covariance ellipsoids and their sections by planes normal to the mean
//! path.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{invalid, Error, Result};
use crate::gp::{check_tau, TrajectoryModel};

/// Eigen-decomposition k = R Λ Rᵀ of a 3 × 3 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenFrame {
    /// Columns are unit eigenvectors, matching `values`.
    pub vectors: Matrix3<f64>,
    /// Descending, all positive.
    pub values: Vector3<f64>,
}

impl EigenFrame {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.vectors * Matrix3::from_diagonal(&self.values) * self.vectors.transpose()
    }

    pub fn inverse(&self) -> Matrix3<f64> {
        self.vectors
            * Matrix3::from_diagonal(&self.values.map(|v| 1.0 / v))
            * self.vectors.transpose()
    }

    /// Semi-axis lengths of the unit Mahalanobis ellipsoid.
    pub fn semi_axes(&self) -> Vector3<f64> {
        self.values.map(f64::sqrt)
    }
}

pub fn eigendecompose(shape: &Matrix3<f64>) -> Result<EigenFrame> {
    let scale = shape.amax().max(f64::MIN_POSITIVE);
    if (shape - shape.transpose()).amax() > 1e-9 * scale {
        return Err(Error::NotPositiveDefinite(
            "covariance is not symmetric".into(),
        ));
    }
    let sym = (shape + shape.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = Vector3::from_fn(|i, _| eig.eigenvalues[order[i]]);
    if !(values[2] > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {}",
            values[2]
        )));
    }
    let vectors = Matrix3::from_columns(&order.map(|i| eig.eigenvectors.column(i).into_owned()));
    Ok(EigenFrame { vectors, values })
}

/// Points whose Mahalanobis distance from `center` under `shape` equals
/// `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: Vector3<f64>,
    pub shape: Matrix3<f64>,
    pub radius: f64,
    precision: Matrix3<f64>,
}

impl Ellipsoid {
    pub fn new(center: Vector3<f64>, shape: Matrix3<f64>, radius: f64) -> Result<Self> {
        let frame = eigendecompose(&shape)?;
        Ok(Self::with_precision(center, shape, frame.inverse(), radius))
    }

    pub(crate) fn with_precision(
        center: Vector3<f64>,
        shape: Matrix3<f64>,
        precision: Matrix3<f64>,
        radius: f64,
    ) -> Self {
        Self {
            center,
            shape,
            radius,
            precision,
        }
    }

    /// Squared Mahalanobis distance (p − c)ᵀ k⁻¹ (p − c).
    pub fn mahalanobis_sq(&self, p: &Vector3<f64>) -> f64 {
        mahalanobis_sq(p, &self.center, &self.precision)
    }
}

pub fn mahalanobis_sq(p: &Vector3<f64>, center: &Vector3<f64>, precision: &Matrix3<f64>) -> f64 {
    let d = p - center;
    d.dot(&(precision * d))
}

/// Plane through a mean-path point, normal to the path direction, with an
/// in-plane frame: angle 0° along `lateral`, 90° along `vertical`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPlane {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub lateral: Vector3<f64>,
    pub vertical: Vector3<f64>,
}

const UP: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);
const EAST: Vector3<f64> = Vector3::new(1.0, 0.0, 0.0);

impl SectionPlane {
    /// Plane through `point` with the given path direction. `lateral` is
    /// direction × up (the right-hand side of travel), falling back to east
    /// for vertical paths; `vertical` is lateral × direction, which points
    /// upward for level flight.
    pub fn from_direction(point: Vector3<f64>, direction: Vector3<f64>) -> Result<Self> {
        let len = direction.norm();
        if !(len >= 1e-12) {
            return Err(invalid("direction", "zero path direction"));
        }
        let normal = direction / len;
        let cross = normal.cross(&UP);
        let lateral = if cross.norm() > 1e-9 {
            cross.normalize()
        } else {
            (EAST - normal * EAST.dot(&normal)).normalize()
        };
        let vertical = lateral.cross(&normal).normalize();
        Ok(Self {
            point,
            normal,
            lateral,
            vertical,
        })
    }

    /// Unit in-plane direction at `angle_deg`.
    pub fn direction(&self, angle_deg: f64) -> Vector3<f64> {
        let (s, c) = angle_deg.to_radians().sin_cos();
        self.lateral * c + self.vertical * s
    }

    pub fn to_world(&self, p: Vector2<f64>) -> Vector3<f64> {
        self.point + self.lateral * p[0] + self.vertical * p[1]
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.point).dot(&self.normal)
    }
}

/// Plane normal to the real-space mean path at `tau`, from a central
/// difference of width `d_tau` (one-sided where it would leave [0, 1]).
pub fn section_plane(model: &TrajectoryModel, tau: f64, d_tau: f64) -> Result<SectionPlane> {
    check_tau(tau)?;
    if !(d_tau > 0.0 && d_tau <= 0.1) {
        return Err(invalid("d_tau", format!("{d_tau} not in (0, 0.1]")));
    }
    let (lo, hi) = difference_interval(tau, d_tau);
    let slope = (model.real_section(hi).mean - model.real_section(lo).mean) / (hi - lo);
    if slope.norm() < 1e-12 {
        return Err(Error::StationaryMean { tau });
    }
    SectionPlane::from_direction(model.real_section(tau).mean, slope)
}

pub(crate) fn difference_interval(tau: f64, d_tau: f64) -> (f64, f64) {
    let half = d_tau / 2.0;
    if tau - half < 0.0 {
        (tau, tau + d_tau)
    } else if tau + half > 1.0 {
        (tau - d_tau, tau)
    } else {
        (tau - half, tau + half)
    }
}

/// A quadric restricted to a [`SectionPlane`]: in the plane's (lateral,
/// vertical) coordinates x relative to the plane point,
/// `xᵀ A x + 2 bᵀ x + c₀` is the Mahalanobis distance squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PlaneQuadric {
    quad: Matrix2<f64>,
    linear: Vector2<f64>,
    c0: f64,
}

impl PlaneQuadric {
    /// With p = q + s·u + t·v: A = [u v]ᵀP[u v], b = [u v]ᵀP(q − c),
    /// c₀ = (q − c)ᵀP(q − c).
    pub(crate) fn restrict(
        center: &Vector3<f64>,
        precision: &Matrix3<f64>,
        plane: &SectionPlane,
    ) -> Self {
        let (u, v) = (plane.lateral, plane.vertical);
        let pu = precision * u;
        let pv = precision * v;
        let off = plane.point - center;
        let poff = precision * off;
        let uv = 0.5 * (u.dot(&pv) + v.dot(&pu));
        Self {
            quad: Matrix2::new(u.dot(&pu), uv, uv, v.dot(&pv)),
            linear: Vector2::new(u.dot(&poff), v.dot(&poff)),
            c0: off.dot(&poff),
        }
    }

    /// Farthest crossing of the level-`radius` curve by the ray from the
    /// plane point along the unit in-plane direction `dir`.
    pub(crate) fn ray_exit(&self, dir: Vector2<f64>, radius: f64) -> Option<f64> {
        // ρ² dᵀAd + 2ρ bᵀd + (c₀ − r²) = 0
        let a = dir.dot(&(self.quad * dir));
        let b = self.linear.dot(&dir);
        let c = self.c0 - radius * radius;
        let disc = b * b - a * c;
        if disc < 0.0 || !(a > 0.0) {
            return None;
        }
        let root = (-b + disc.sqrt()) / a;
        (root >= 0.0).then_some(root)
    }

    fn ellipse(&self, radius: f64) -> Option<SectionEllipse> {
        let r2 = radius * radius;
        let inv = self.quad.try_inverse()?;
        let center = -(inv * self.linear);
        let level = r2 - (self.c0 - self.linear.dot(&(inv * self.linear)));
        if level < -1e-12 * r2 {
            return None;
        }
        let level = level.max(0.0);
        let eig = self.quad.symmetric_eigen();
        let (major, minor) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let axis = |k: usize| {
            eig.eigenvectors.column(k).into_owned() * (level / eig.eigenvalues[k]).sqrt()
        };
        Some(SectionEllipse {
            center,
            axes: [axis(major), axis(minor)],
            quadric: *self,
            radius,
        })
    }
}

/// The ellipse cut from an ellipsoid by a [`SectionPlane`], in the plane's
/// (lateral, vertical) coordinates relative to the plane point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionEllipse {
    pub center: Vector2<f64>,
    /// Semi-axis vectors (in-plane coordinates), major first.
    pub axes: [Vector2<f64>; 2],
    quadric: PlaneQuadric,
    radius: f64,
}

impl SectionEllipse {
    pub fn semi_axis_lengths(&self) -> [f64; 2] {
        [self.axes[0].norm(), self.axes[1].norm()]
    }

    /// Point at parametric angle `t` (radians).
    pub fn point(&self, t: f64) -> Vector2<f64> {
        self.center + self.axes[0] * t.cos() + self.axes[1] * t.sin()
    }

    /// Farthest crossing of the ray from the plane point along the in-plane
    /// unit direction `dir`, as a distance along the ray.
    pub fn ray_exit(&self, dir: Vector2<f64>) -> Option<f64> {
        self.quadric.ray_exit(dir, self.radius)
    }
}

/// Section of `e` by `plane`, or `None` when the plane misses it.
pub fn plane_ellipsoid_intersection(
    e: &Ellipsoid,
    plane: &SectionPlane,
) -> Result<Option<SectionEllipse>> {
    if !(e.radius > 0.0) {
        return Err(invalid("radius", "must be positive"));
    }
    Ok(PlaneQuadric::restrict(&e.center, &e.precision, plane).ellipse(e.radius))
}
