//! Trajectory ingestion, airport geometry, and per-trajectory pre-filters.
//!
//! Coordinates are local projected metres (east, north, altitude). The CSV
//! wire format carries one point per row:
//!
//! ```text
//! traj_id,time_s,east_m,north_m,alt_m
//! ```
//!
//! Rows belonging to one trajectory need not be contiguous.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 5] = ["traj_id", "time_s", "east_m", "north_m", "alt_m"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    /// Seconds since track start.
    pub time: f64,
    pub east: f64,
    pub north: f64,
    pub altitude: f64,
}

impl TrajectoryPoint {
    pub fn new(time: f64, east: f64, north: f64, altitude: f64) -> Self {
        Self {
            time,
            east,
            north,
            altitude,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.east, self.north, self.altitude]
    }

    fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.east.is_finite()
            && self.north.is_finite()
            && self.altitude.is_finite()
    }
}

/// One recorded track: at least two points with strictly increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, points: Vec<TrajectoryPoint>) -> Result<Self> {
        let id = id.into();
        let bad = |message: &str| Error::InvalidTrajectory {
            id: id.clone(),
            message: message.to_string(),
        };
        if points.len() < 2 {
            return Err(bad("fewer than 2 points"));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(bad(&format!("non-finite point at t = {}", p.time)));
        }
        if points.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(bad("time is not strictly increasing"));
        }
        Ok(Self { id, points })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajectoryPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.last().time - self.first().time
    }
}

/// Output of [`parse_trajectories`].
#[derive(Debug, Clone, Default)]
pub struct ParsedTrajectories {
    /// In order of first appearance of each id.
    pub trajectories: Vec<Trajectory>,
    /// Ids dropped for having fewer than two points.
    pub rejected_short: Vec<String>,
}

/// Parse the trajectory CSV format.
pub fn parse_trajectories<R: Read>(input: R) -> Result<ParsedTrajectories> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                TRAJECTORY_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<TrajectoryPoint>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 fields, found {}", record.len()),
            });
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty traj_id".into(),
            });
        }
        let mut values = [0.0; 4];
        for (k, value) in values.iter_mut().enumerate() {
            let field = &record[k + 1];
            *value = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!(
                        "field `{}` is not a finite number: `{field}`",
                        TRAJECTORY_HEADER[k + 1]
                    ),
                })?;
        }
        if values[0] < 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("negative time_s `{}`", values[0]),
            });
        }
        let point = TrajectoryPoint::new(values[0], values[1], values[2], values[3]);
        match groups.get_mut(id) {
            Some(points) => points.push(point),
            None => {
                order.push(id.to_string());
                groups.insert(id.to_string(), vec![point]);
            }
        }
    }

    let mut parsed = ParsedTrajectories::default();
    for id in order {
        let mut points = groups.remove(&id).unwrap_or_default();
        if points.len() < 2 {
            parsed.rejected_short.push(id);
            continue;
        }
        points.sort_by(|a, b| a.time.total_cmp(&b.time));
        if points.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidTrajectory {
                id,
                message: "repeated timestamp; time must be strictly increasing".into(),
            });
        }
        parsed.trajectories.push(Trajectory { id, points });
    }
    Ok(parsed)
}

/// Write trajectories in the CSV format read by [`parse_trajectories`].
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so parsing the output reproduces the input exactly.
pub fn write_trajectories<W: Write>(out: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(TRAJECTORY_HEADER)?;
    for t in trajectories {
        for p in &t.points {
            writer.write_record([
                t.id.clone(),
                p.time.to_string(),
                p.east.to_string(),
                p.north.to_string(),
                p.altitude.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Approach,
    Departure,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Approach => "approach",
            Phase::Departure => "departure",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Runway {
    pub id: String,
    pub end_a: [f64; 2],
    pub end_b: [f64; 2],
}

impl Runway {
    /// Ground distance from `p` to the runway centerline segment.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        point_segment_distance(p, self.end_a, self.end_b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirportGeometry {
    pub center: [f64; 2],
    pub runways: Vec<Runway>,
}

impl AirportGeometry {
    pub fn new(center: [f64; 2], runways: Vec<Runway>) -> Result<Self> {
        if runways.is_empty() {
            return Err(Error::Geometry("at least one runway is required".into()));
        }
        for r in &runways {
            if r.end_a == r.end_b {
                return Err(Error::Geometry(format!(
                    "runway `{}` has identical endpoints",
                    r.id
                )));
            }
            if r.end_a.iter().chain(&r.end_b).any(|v| !v.is_finite()) {
                return Err(Error::Geometry(format!(
                    "runway `{}` has non-finite endpoints",
                    r.id
                )));
            }
        }
        Ok(Self { center, runways })
    }

    /// Parse the key-value airport file:
    ///
    /// ```text
    /// airport_center = <e>,<n>
    /// runway = <id>,<ea>,<na>,<eb>,<nb>
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut center = None;
        let mut runways = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let fields: Vec<&str> = value.split(',').map(str::trim).collect();
            let numbers = |fs: &[&str]| -> Result<Vec<f64>> {
                fs.iter()
                    .map(|f| {
                        f.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| Error::Parse {
                                line: line_no,
                                message: format!("not a finite number: `{f}`"),
                            })
                    })
                    .collect()
            };
            match key.trim() {
                "airport_center" => {
                    if fields.len() != 2 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "airport_center needs 2 values".into(),
                        });
                    }
                    let v = numbers(&fields)?;
                    center = Some([v[0], v[1]]);
                }
                "runway" => {
                    if fields.len() != 5 || fields[0].is_empty() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "runway needs `<id>,<ea>,<na>,<eb>,<nb>`".into(),
                        });
                    }
                    let v = numbers(&fields[1..])?;
                    runways.push(Runway {
                        id: fields[0].to_string(),
                        end_a: [v[0], v[1]],
                        end_b: [v[2], v[3]],
                    });
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let center = center.ok_or_else(|| Error::Geometry("missing airport_center".into()))?;
        Self::new(center, runways)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("airport_center = {},{}\n", self.center[0], self.center[1]);
        for r in &self.runways {
            s.push_str(&format!(
                "runway = {},{},{},{},{}\n",
                r.id, r.end_a[0], r.end_a[1], r.end_b[0], r.end_b[1]
            ));
        }
        s
    }
}

fn ground(p: &TrajectoryPoint) -> [f64; 2] {
    [p.east, p.north]
}

fn dist2d(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist2d(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}

/// Departure iff the first point is strictly closer to the airport than the
/// last one. Equidistant endpoints classify as approach.
pub fn classify_phase(t: &Trajectory, geometry: &AirportGeometry) -> Phase {
    let d_first = dist2d(geometry.center, ground(t.first()));
    let d_last = dist2d(geometry.center, ground(t.last()));
    if d_first < d_last {
        Phase::Departure
    } else {
        Phase::Approach
    }
}

/// Runway whose centerline is nearest to the airport-side endpoint of the
/// track. Ties go to the lexicographically smallest id.
pub fn assign_runway<'g>(t: &Trajectory, geometry: &'g AirportGeometry, phase: Phase) -> &'g str {
    let end = match phase {
        Phase::Departure => ground(t.first()),
        Phase::Approach => ground(t.last()),
    };
    let mut best: Option<(&Runway, f64)> = None;
    for r in &geometry.runways {
        let d = r.distance_to(end);
        best = match best {
            Some((b, bd)) if bd < d || (bd == d && b.id <= r.id) => Some((b, bd)),
            _ => Some((r, d)),
        };
    }
    // AirportGeometry::new guarantees at least one runway.
    &best.expect("airport geometry without runways").0.id
}

/// Keep the airport-side run of points at or below `max_altitude`: the
/// leading run for departures, the trailing run for approaches.
///
/// Returns `None` when fewer than two points survive.
pub fn filter_altitude(t: &Trajectory, phase: Phase, max_altitude: f64) -> Option<Trajectory> {
    let below = |p: &&TrajectoryPoint| p.altitude <= max_altitude;
    let points: Vec<TrajectoryPoint> = match phase {
        Phase::Departure => t.points.iter().take_while(below).copied().collect(),
        Phase::Approach => {
            let mut tail: Vec<_> = t.points.iter().rev().take_while(below).copied().collect();
            tail.reverse();
            tail
        }
    };
    (points.len() >= 2).then(|| Trajectory {
        id: t.id.clone(),
        points,
    })
}
