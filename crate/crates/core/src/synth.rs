//! Seeded synthetic data: departure corridors in metres, and tracks drawn
//! directly from a known basis-function model.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::gp::{BasisSet, ModelParams, NormalizedTrack};
use crate::track::{AirportGeometry, Runway, Trajectory, TrajectoryPoint};

/// A nominal departure path: straight, then a constant-radius turn, then
/// straight again, climbing at a constant gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    pub name: String,
    /// Start of the path on the ground.
    pub start: [f64; 2],
    /// Initial heading, degrees counter-clockwise from east.
    pub heading_deg: f64,
    /// Straight length before the turn, metres.
    pub straight_m: f64,
    /// Signed turn, degrees; positive turns left.
    pub turn_deg: f64,
    pub turn_radius_m: f64,
    /// Total path length, metres.
    pub length_m: f64,
    /// Climb gradient (metres up per metre along track).
    pub climb: f64,
}

impl Corridor {
    /// Position and unit heading at arc length `s`.
    fn centerline(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let h0 = self.heading_deg.to_radians();
        let turn = self.turn_deg.to_radians();
        let arc = turn.abs() * self.turn_radius_m;
        let dir = |h: f64| [h.cos(), h.sin()];
        let mut p = self.start;
        let first = s.min(self.straight_m);
        let d = dir(h0);
        p = [p[0] + first * d[0], p[1] + first * d[1]];
        if s <= self.straight_m {
            return (p, d);
        }
        let along = (s - self.straight_m).min(arc);
        let sign = turn.signum();
        let dh = if self.turn_radius_m > 0.0 {
            sign * along / self.turn_radius_m
        } else {
            0.0
        };
        // Centre of the turn circle lies to the left (sign > 0) or right.
        let left = [-d[1], d[0]];
        let c = [
            p[0] + sign * self.turn_radius_m * left[0],
            p[1] + sign * self.turn_radius_m * left[1],
        ];
        let h = h0 + dh;
        let rel = [p[0] - c[0], p[1] - c[1]];
        let (sn, cs) = dh.sin_cos();
        p = [
            c[0] + cs * rel[0] - sn * rel[1],
            c[1] + sn * rel[0] + cs * rel[1],
        ];
        if s <= self.straight_m + arc {
            return (p, dir(h));
        }
        let rest = s - self.straight_m - arc;
        let d = dir(h);
        ([p[0] + rest * d[0], p[1] + rest * d[1]], d)
    }
}

/// Dispersion and sampling of the corridor generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub per_corridor: usize,
    pub points_min: usize,
    pub points_max: usize,
    /// Lateral offset standard deviation at the end of the path, metres.
    pub lateral_sigma_m: f64,
    /// Standard deviation of the climb gradient.
    pub climb_sigma: f64,
    /// Per-coordinate white noise, metres.
    pub noise_m: f64,
    /// Extra trajectories with random headings, as a fraction of the total.
    pub outlier_fraction: f64,
    pub speed_range: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            per_corridor: 200,
            points_min: 30,
            points_max: 80,
            lateral_sigma_m: 600.0,
            climb_sigma: 0.008,
            noise_m: 15.0,
            outlier_fraction: 0.0,
            speed_range: (70.0, 90.0),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.per_corridor == 0 {
            return Err(invalid("per_corridor", "must be positive"));
        }
        if self.points_min < 2 || self.points_max < self.points_min {
            return Err(invalid("points", "need 2 <= points_min <= points_max"));
        }
        for (name, v) in [
            ("lateral_sigma_m", self.lateral_sigma_m),
            ("climb_sigma", self.climb_sigma),
            ("noise_m", self.noise_m),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and non-negative"));
            }
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(invalid("outlier_fraction", "must be in [0, 1)"));
        }
        let (lo, hi) = self.speed_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid("speed_range", "need 0 < min <= max"));
        }
        Ok(())
    }
}

/// Two parallel runways with two departure corridors each: one straight
/// with a late turn and one turning early.
pub fn default_airport() -> AirportGeometry {
    AirportGeometry::new(
        [0.0, 0.0],
        vec![
            Runway {
                id: "09".into(),
                end_a: [-1500.0, 800.0],
                end_b: [1500.0, 800.0],
            },
            Runway {
                id: "27".into(),
                end_a: [1500.0, -800.0],
                end_b: [-1500.0, -800.0],
            },
        ],
    )
    .expect("valid airport")
}

pub fn default_corridors() -> Vec<Corridor> {
    let c =
        |name: &str, start: [f64; 2], heading_deg: f64, straight_m: f64, turn_deg: f64| Corridor {
            name: name.into(),
            start,
            heading_deg,
            straight_m,
            turn_deg,
            turn_radius_m: 3000.0,
            length_m: 25000.0,
            climb: 0.07,
        };
    vec![
        c("east-late", [1500.0, 800.0], 0.0, 14000.0, 90.0),
        c("east-early", [1500.0, 800.0], 0.0, 1500.0, -60.0),
        c("west-late", [-1500.0, -800.0], 180.0, 14000.0, -90.0),
        c("west-early", [-1500.0, -800.0], 180.0, 1500.0, 60.0),
    ]
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn sample_corridor_track(
    corridor: &Corridor,
    id: String,
    config: &SynthConfig,
    heading_jitter_deg: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let m = rng.random_range(config.points_min..=config.points_max);
    let speed = rng.random_range(config.speed_range.0..=config.speed_range.1);
    let lateral_end = config.lateral_sigma_m * normal(rng);
    let lateral_bend = 0.5 * config.lateral_sigma_m * normal(rng);
    let climb = (corridor.climb + config.climb_sigma * normal(rng)).max(0.01);
    let mut path = corridor.clone();
    path.heading_deg += heading_jitter_deg;
    let len = path.length_m;
    let mut points = Vec::with_capacity(m);
    for i in 0..m {
        let s = len * i as f64 / (m - 1) as f64;
        let u = s / len;
        let ([e, n], d) = path.centerline(s);
        let offset = lateral_end * u * u + lateral_bend * (PI * u).sin() * u;
        let left = [-d[1], d[0]];
        points.push(TrajectoryPoint::new(
            s / speed,
            e + offset * left[0] + config.noise_m * normal(rng),
            n + offset * left[1] + config.noise_m * normal(rng),
            climb * s + config.noise_m * normal(rng),
        ));
    }
    Trajectory::new(id, points)
}

/// Sample `config.per_corridor` trajectories per corridor, corridor by
/// corridor, plus any outliers at the end.
pub fn generate_corridors(
    corridors: &[Corridor],
    config: &SynthConfig,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    if corridors.is_empty() {
        return Err(invalid("corridors", "need at least one corridor"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for c in corridors {
        for k in 0..config.per_corridor {
            out.push(sample_corridor_track(
                c,
                format!("{}-{k:04}", c.name),
                config,
                0.0,
                &mut rng,
            )?);
        }
    }
    let regular = out.len() as f64;
    let n_out =
        (regular * config.outlier_fraction / (1.0 - config.outlier_fraction)).round() as usize;
    for k in 0..n_out {
        let c = &corridors[k % corridors.len()];
        let jitter = rng.random_range(20.0..70.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        out.push(sample_corridor_track(
            c,
            format!("stray-{k:04}"),
            config,
            jitter,
            &mut rng,
        )?);
    }
    Ok(out)
}

/// A random but well-conditioned model in normalised coordinates: a smooth
/// mean inside the unit cube, a covariance with three dominant smooth modes
/// plus a small diagonal, and the given noise precision.
pub fn random_model_params(basis: &BasisSet, beta: f64, rng: &mut ChaCha8Rng) -> ModelParams {
    let j = basis.count();
    let dim = 3 * j;
    let mut mu = DVector::zeros(dim);
    for d in 0..3 {
        mu[d * j] = 0.5;
        for k in 1..j {
            mu[d * j + k] = 0.3 * normal(rng);
        }
    }
    let modes = DMatrix::from_fn(dim, 3, |_, _| 0.05 * normal(rng));
    let mut sigma = &modes * modes.transpose();
    for i in 0..dim {
        sigma[(i, i)] += 1e-4;
    }
    ModelParams { mu, sigma, beta }
}

/// Draw `n` tracks from `params`: w ~ N(μ, Σ), then each point
/// y = Φ(τ) w + N(0, β⁻¹ I). Times are sorted uniform draws with τ = 0 and
/// τ = 1 always present.
pub fn sample_model_tracks(
    params: &ModelParams,
    basis: &BasisSet,
    n: usize,
    points: (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NormalizedTrack>> {
    let j = basis.count();
    if params.dim() != 3 * j {
        return Err(invalid("params", "size does not match basis"));
    }
    if points.0 < 2 || points.1 < points.0 {
        return Err(invalid("points", "need 2 <= min <= max"));
    }
    let chol = Cholesky::new(params.sigma.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("Sigma".into()))?;
    let l = chol.l();
    let noise = 1.0 / params.beta.sqrt();
    let mut out = Vec::with_capacity(n);
    for idx in 0..n {
        let z = DVector::from_fn(3 * j, |_, _| normal(rng));
        let w = &params.mu + &l * z;
        let m = rng.random_range(points.0..=points.1);
        let mut taus: Vec<f64> = (0..m - 2).map(|_| rng.random::<f64>()).collect();
        taus.push(0.0);
        taus.push(1.0);
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        let coords = taus
            .iter()
            .map(|&t| {
                let v = basis.values(t);
                std::array::from_fn(|d| {
                    let mean: f64 = (0..j).map(|k| v[k] * w[d * j + k]).sum();
                    mean + noise * normal(rng)
                })
            })
            .collect();
        out.push(NormalizedTrack {
            id: format!("m{idx:04}"),
            taus,
            coords,
        });
    }
    Ok(out)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
