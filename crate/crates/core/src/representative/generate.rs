use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector2, Vector3};

use super::geometry::{eigendecompose, section_plane, PlaneQuadric, SectionPlane};
use super::scheme::{RepresentativeScheme, SchemeEntry};
use crate::error::{invalid, Error, Result};
use crate::gp::{check_tau, TrajectoryModel};
use crate::par::Exec;

/// Which sample times are searched for the ellipsoid reaching farthest
/// along a section ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchWindow {
    /// Every sample time.
    #[default]
    All,
    /// Sample times within this many steps of the section.
    Steps(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationSettings {
    pub steps: usize,
    pub d_tau: f64,
    pub search: SearchWindow,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            steps: 100,
            d_tau: 1e-4,
            search: SearchWindow::All,
        }
    }
}

impl GenerationSettings {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(invalid("steps", "need at least 2"));
        }
        if !(self.d_tau > 0.0 && self.d_tau <= 0.1) {
            return Err(invalid("d_tau", format!("{} not in (0, 0.1]", self.d_tau)));
        }
        Ok(())
    }

    /// τ_i = i / (steps − 1).
    pub fn taus(&self) -> Vec<f64> {
        sample_taus(self.steps)
    }
}

pub fn sample_taus(steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps).map(|i| i as f64 / last).collect()
}

/// Real-space mean, covariance and section plane at every sample time.
#[derive(Debug, Clone)]
pub struct ModelSections {
    taus: Vec<f64>,
    means: Vec<Vector3<f64>>,
    covs: Vec<Matrix3<f64>>,
    precisions: Vec<Matrix3<f64>>,
    planes: Vec<SectionPlane>,
}

impl ModelSections {
    pub fn from_model(
        model: &TrajectoryModel,
        taus: &[f64],
        d_tau: f64,
        exec: Exec,
    ) -> Result<Self> {
        for &t in taus {
            check_tau(t)?;
        }
        let parts = exec.map(taus, |&tau| -> Result<_> {
            let s = model.real_section(tau);
            let plane = section_plane(model, tau, d_tau)?;
            Ok((s.mean, s.cov, plane))
        });
        let mut means = Vec::with_capacity(taus.len());
        let mut covs = Vec::with_capacity(taus.len());
        let mut planes = Vec::with_capacity(taus.len());
        for p in parts {
            let (m, k, plane) = p?;
            means.push(m);
            covs.push(k);
            planes.push(plane);
        }
        Self::from_parts(taus.to_vec(), means, covs, planes)
    }

    /// Assemble from explicit sections. Every covariance must be SPD.
    pub fn from_parts(
        taus: Vec<f64>,
        means: Vec<Vector3<f64>>,
        covs: Vec<Matrix3<f64>>,
        planes: Vec<SectionPlane>,
    ) -> Result<Self> {
        let n = taus.len();
        if n == 0 || means.len() != n || covs.len() != n || planes.len() != n {
            return Err(invalid(
                "sections",
                "taus, means, covariances and planes must have equal nonzero length",
            ));
        }
        let precisions = covs
            .iter()
            .map(|k| eigendecompose(k).map(|f| f.inverse()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            taus,
            means,
            covs,
            precisions,
            planes,
        })
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.taus[i]
    }

    pub fn mean(&self, i: usize) -> Vector3<f64> {
        self.means[i]
    }

    pub fn cov(&self, i: usize) -> Matrix3<f64> {
        self.covs[i]
    }

    pub fn precision(&self, i: usize) -> Matrix3<f64> {
        self.precisions[i]
    }

    pub fn plane(&self, i: usize) -> &SectionPlane {
        &self.planes[i]
    }

    fn window(&self, i: usize, search: SearchWindow) -> std::ops::Range<usize> {
        match search {
            SearchWindow::All => 0..self.len(),
            SearchWindow::Steps(w) => i.saturating_sub(w)..(i + w + 1).min(self.len()),
        }
    }

    fn quadrics(&self, i: usize, search: SearchWindow) -> Vec<(usize, PlaneQuadric)> {
        let plane = &self.planes[i];
        self.window(i, search)
            .map(|j| {
                (
                    j,
                    PlaneQuadric::restrict(&self.means[j], &self.precisions[j], plane),
                )
            })
            .collect()
    }
}

/// A representative point and the sample whose ellipsoid produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentativePoint {
    pub position: Vector3<f64>,
    /// Index into the searched sections.
    pub source: usize,
    /// Distance from the mean point of the section.
    pub deviation: f64,
}

fn farthest(
    plane: &SectionPlane,
    own: usize,
    quadrics: &[(usize, PlaneQuadric)],
    radius: f64,
    angle_deg: f64,
) -> Result<RepresentativePoint> {
    if radius == 0.0 {
        return Ok(RepresentativePoint {
            position: plane.point,
            source: own,
            deviation: 0.0,
        });
    }
    let (s, c) = angle_deg.to_radians().sin_cos();
    let dir = Vector2::new(c, s);
    let mut best: Option<(usize, f64)> = None;
    for &(j, ref q) in quadrics {
        if let Some(rho) = q.ray_exit(dir, radius) {
            if best.is_none_or(|(_, b)| rho > b) {
                best = Some((j, rho));
            }
        }
    }
    let (source, deviation) = best.ok_or_else(|| {
        Error::Geometry(format!(
            "no ellipsoid crosses the section ray at sample {own}, angle {angle_deg}"
        ))
    })?;
    Ok(RepresentativePoint {
        position: plane.point + plane.direction(angle_deg) * deviation,
        source,
        deviation,
    })
}

/// Representative point at section `i` of `sections`, searching the
/// ellipsoids of `search` (the section's own ellipsoid is always included).
pub fn representative_point_at(
    sections: &ModelSections,
    i: usize,
    radius: f64,
    angle_deg: f64,
    search: SearchWindow,
) -> Result<RepresentativePoint> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid("radius", "must be finite and non-negative"));
    }
    if i >= sections.len() {
        return Err(invalid("section", format!("{i} out of range")));
    }
    farthest(
        &sections.planes[i],
        i,
        &sections.quadrics(i, search),
        radius,
        angle_deg,
    )
}

/// Representative point of `model` at `tau`, searching the ellipsoids at
/// `search_taus` and at `tau` itself. The returned `source` indexes
/// `search_taus`, or equals `search_taus.len()` for `tau` itself.
pub fn representative_point(
    model: &TrajectoryModel,
    tau: f64,
    radius: f64,
    angle_deg: f64,
    search_taus: &[f64],
    d_tau: f64,
) -> Result<RepresentativePoint> {
    check_tau(tau)?;
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid("radius", "must be finite and non-negative"));
    }
    let plane = section_plane(model, tau, d_tau)?;
    let mut quadrics = Vec::with_capacity(search_taus.len() + 1);
    for (j, &t) in search_taus.iter().chain(std::iter::once(&tau)).enumerate() {
        check_tau(t)?;
        let s = model.real_section(t);
        let precision = eigendecompose(&s.cov)?.inverse();
        quadrics.push((j, PlaneQuadric::restrict(&s.mean, &precision, &plane)));
    }
    farthest(&plane, search_taus.len(), &quadrics, radius, angle_deg)
}

/// One weighted representative trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTrajectory {
    pub cluster: usize,
    pub radius: f64,
    pub angle_deg: f64,
    pub weight: f64,
    pub points: Vec<Vector3<f64>>,
    /// For each point, the sample index of the generating ellipsoid. Empty
    /// when read back from CSV.
    pub sources: Vec<usize>,
}

/// Weighted representative trajectories of one model, in scheme order.
pub fn generate_representatives(
    model: &TrajectoryModel,
    scheme: &RepresentativeScheme,
    cluster: usize,
    settings: &GenerationSettings,
    exec: Exec,
) -> Result<Vec<WeightedTrajectory>> {
    settings.validate()?;
    let sections = ModelSections::from_model(model, &settings.taus(), settings.d_tau, exec)?;
    generate_from_sections(&sections, scheme, cluster, settings.search, exec)
}

pub fn generate_from_sections(
    sections: &ModelSections,
    scheme: &RepresentativeScheme,
    cluster: usize,
    search: SearchWindow,
    exec: Exec,
) -> Result<Vec<WeightedTrajectory>> {
    let entries = scheme.entries();
    let per_step = exec.map_range(sections.len(), |i| -> Result<Vec<RepresentativePoint>> {
        let quadrics = sections.quadrics(i, search);
        entries
            .iter()
            .map(|e| farthest(&sections.planes[i], i, &quadrics, e.radius, e.angle_deg))
            .collect()
    });
    let per_step = per_step.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(entries
        .iter()
        .enumerate()
        .map(
            |(
                k,
                &SchemeEntry {
                    radius,
                    angle_deg,
                    weight,
                },
            )| WeightedTrajectory {
                cluster,
                radius,
                angle_deg,
                weight,
                points: per_step.iter().map(|row| row[k].position).collect(),
                sources: per_step.iter().map(|row| row[k].source).collect(),
            },
        )
        .collect())
}

pub const REPRESENTATIVE_HEADER: [&str; 8] = [
    "cluster",
    "radius",
    "angle_deg",
    "weight",
    "step",
    "east_m",
    "north_m",
    "alt_m",
];

pub fn write_representatives<W: Write>(out: W, reps: &[WeightedTrajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPRESENTATIVE_HEADER)?;
    for r in reps {
        for (step, p) in r.points.iter().enumerate() {
            w.write_record([
                r.cluster.to_string(),
                r.radius.to_string(),
                r.angle_deg.to_string(),
                r.weight.to_string(),
                step.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                p[2].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read the CSV written by [`write_representatives`]. A trajectory starts
/// at every row with `step = 0`; steps must then count up by one.
pub fn read_representatives<R: Read>(input: R) -> Result<Vec<WeightedTrajectory>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(REPRESENTATIVE_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", REPRESENTATIVE_HEADER.join(",")),
        });
    }
    let mut out: Vec<WeightedTrajectory> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |field: &str| Error::Parse {
            line,
            message: format!("bad `{field}` value"),
        };
        if record.len() != REPRESENTATIVE_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields", REPRESENTATIVE_HEADER.len()),
            });
        }
        let cluster: usize = record[0].parse().map_err(|_| bad("cluster"))?;
        let step: usize = record[4].parse().map_err(|_| bad("step"))?;
        let mut v = [0.0; 6];
        for (slot, k) in v.iter_mut().zip([1, 2, 3, 5, 6, 7]) {
            *slot = record[k]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(REPRESENTATIVE_HEADER[k]))?;
        }
        let point = Vector3::new(v[3], v[4], v[5]);
        if step == 0 {
            out.push(WeightedTrajectory {
                cluster,
                radius: v[0],
                angle_deg: v[1],
                weight: v[2],
                points: vec![point],
                sources: Vec::new(),
            });
            continue;
        }
        match out.last_mut() {
            Some(t)
                if t.points.len() == step
                    && t.cluster == cluster
                    && t.radius == v[0]
                    && t.angle_deg == v[1] =>
            {
                t.points.push(point)
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("step {step} does not continue a trajectory"),
                })
            }
        }
    }
    Ok(out)
}
