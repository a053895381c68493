//! Ground-level proximity footprints.
//!
//! A grid cell's value is the percentage of traffic with at least one
//! sample point within `range` metres (3-D distance) of the cell centre at
//! altitude 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::representative::WeightedTrajectory;
use crate::track::Trajectory;

pub const DEFAULT_RANGE_M: f64 = 300.0;
pub const DEFAULT_CELLS: usize = 100;

/// Regular grid of `nx × ny` square cells; cell (i, j) spans
/// `origin + [i, i+1) × cell` east and `[j, j+1) × cell` north.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], cell: f64, nx: usize, ny: usize) -> Result<Self> {
        let spec = Self {
            origin,
            cell,
            nx,
            ny,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(invalid("cell", "must be positive"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(invalid("grid", "nx and ny must be at least 1"));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(invalid("origin", "must be finite"));
        }
        Ok(())
    }

    /// The bounding box of the ground projections of `tracks`, expanded by
    /// `range` on every side, split into `cells` along its longer side.
    pub fn covering(tracks: &[Trajectory], range: f64, cells: usize) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in tracks.iter().flat_map(|t| t.points()) {
            lo = [lo[0].min(p.east), lo[1].min(p.north)];
            hi = [hi[0].max(p.east), hi[1].max(p.north)];
        }
        if !lo[0].is_finite() {
            return Err(invalid("trajectories", "no points to cover"));
        }
        if !(range >= 0.0) || cells == 0 {
            return Err(invalid("grid", "need range >= 0 and at least one cell"));
        }
        let origin = [lo[0] - range, lo[1] - range];
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]) + 2.0 * range;
        let cell = if extent > 0.0 {
            extent / cells as f64
        } else {
            1.0
        };
        Self::new(origin, cell, cells, cells)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index: north row `j`, east column `i`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell,
            self.origin[1] + (j as f64 + 0.5) * self.cell,
        ]
    }

    pub fn translated(&self, east: f64, north: f64) -> Self {
        Self {
            origin: [self.origin[0] + east, self.origin[1] + north],
            ..*self
        }
    }

    /// Column range whose centres may lie within `half` of `x`.
    fn span(&self, x: f64, half: f64, origin: f64, n: usize) -> std::ops::Range<usize> {
        let lo = ((x - half - origin) / self.cell - 0.5).floor() - 1.0;
        let hi = ((x + half - origin) / self.cell - 0.5).ceil() + 1.0;
        let clamp = |v: f64| v.max(0.0).min(n as f64) as usize;
        clamp(lo)..clamp(hi + 1.0)
    }
}

#[inline]
fn within(center: [f64; 2], p: &Vector3<f64>, range_sq: f64) -> bool {
    let de = center[0] - p[0];
    let dn = center[1] - p[1];
    de * de + dn * dn + p[2] * p[2] <= range_sq
}

/// Cells within `range` of any point of one track, ascending.
fn track_cells(spec: &GridSpec, points: &[Vector3<f64>], range: f64) -> Vec<u32> {
    let range_sq = range * range;
    let mut hit = vec![false; spec.len()];
    for p in points {
        if p[2].abs() > range {
            continue;
        }
        let half = (range_sq - p[2] * p[2]).max(0.0).sqrt();
        for j in spec.span(p[1], half, spec.origin[1], spec.ny) {
            for i in spec.span(p[0], half, spec.origin[0], spec.nx) {
                let idx = spec.index(i, j);
                if !hit[idx] && within(spec.center(i, j), p, range_sq) {
                    hit[idx] = true;
                }
            }
        }
    }
    hit.iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(k, _)| k as u32)
        .collect()
}

/// Cells within `range` of any point of one track, by testing every cell
/// against every point.
pub fn track_cells_brute_force(spec: &GridSpec, points: &[Vector3<f64>], range: f64) -> Vec<u32> {
    let range_sq = range * range;
    let mut out = Vec::new();
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            if points
                .iter()
                .any(|p| within(spec.center(i, j), p, range_sq))
            {
                out.push(spec.index(i, j) as u32);
            }
        }
    }
    out
}

/// Percentage values on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintGrid {
    pub spec: GridSpec,
    pub range: f64,
    /// Row-major, see [`GridSpec::index`].
    pub values: Vec<f64>,
}

impl FootprintGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

fn check_footprint_args(spec: &GridSpec, range: f64, n_total: usize) -> Result<()> {
    spec.validate()?;
    if !(range > 0.0 && range.is_finite()) {
        return Err(invalid("range_m", "must be positive"));
    }
    if n_total == 0 {
        return Err(invalid("n_total", "must be positive"));
    }
    Ok(())
}

fn points_of(t: &Trajectory) -> Vec<Vector3<f64>> {
    t.points()
        .iter()
        .map(|p| Vector3::from(p.position()))
        .collect()
}

/// Footprint of raw trajectories as a percentage of `n_total`.
pub fn footprint_raw(
    trajectories: &[Trajectory],
    spec: &GridSpec,
    range: f64,
    n_total: usize,
    exec: Exec,
) -> Result<FootprintGrid> {
    check_footprint_args(spec, range, n_total)?;
    let cells = exec.map(trajectories, |t| track_cells(spec, &points_of(t), range));
    Ok(counts_to_grid(spec, range, n_total, &cells))
}

/// [`footprint_raw`] evaluated by the cell × point double loop.
pub fn footprint_raw_brute_force(
    trajectories: &[Trajectory],
    spec: &GridSpec,
    range: f64,
    n_total: usize,
) -> Result<FootprintGrid> {
    check_footprint_args(spec, range, n_total)?;
    let cells: Vec<_> = trajectories
        .iter()
        .map(|t| track_cells_brute_force(spec, &points_of(t), range))
        .collect();
    Ok(counts_to_grid(spec, range, n_total, &cells))
}

fn counts_to_grid(
    spec: &GridSpec,
    range: f64,
    n_total: usize,
    cells: &[Vec<u32>],
) -> FootprintGrid {
    let mut counts = vec![0usize; spec.len()];
    for c in cells.iter().flatten() {
        counts[*c as usize] += 1;
    }
    FootprintGrid {
        spec: *spec,
        range,
        values: counts
            .iter()
            .map(|&c| 100.0 * c as f64 / n_total as f64)
            .collect(),
    }
}

/// Footprint of weighted representatives: each carries
/// `weight · cluster_size / n_total` of the traffic.
pub fn footprint_weighted(
    reps: &[WeightedTrajectory],
    cluster_sizes: &BTreeMap<usize, usize>,
    n_total: usize,
    spec: &GridSpec,
    range: f64,
    exec: Exec,
) -> Result<FootprintGrid> {
    check_footprint_args(spec, range, n_total)?;
    let total: usize = cluster_sizes.values().sum();
    if total > n_total {
        return Err(invalid(
            "cluster_sizes",
            format!("sum {total} exceeds n_total {n_total}"),
        ));
    }
    let mut shares = Vec::with_capacity(reps.len());
    for r in reps {
        let size = cluster_sizes.get(&r.cluster).ok_or_else(|| {
            invalid(
                "cluster_sizes",
                format!("no size for cluster {}", r.cluster),
            )
        })?;
        if !(r.weight > 0.0 && r.weight <= 1.0) {
            return Err(invalid("weight", format!("{} not in (0, 1]", r.weight)));
        }
        shares.push(100.0 * r.weight * *size as f64 / n_total as f64);
    }
    let cells = exec.map(reps, |r| track_cells(spec, &r.points, range));
    let mut values = vec![0.0; spec.len()];
    for (share, cs) in shares.iter().zip(&cells) {
        for c in cs {
            values[*c as usize] += share;
        }
    }
    Ok(FootprintGrid {
        spec: *spec,
        range,
        values,
    })
}

/// The deviation statistics of a candidate footprint against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintComparison {
    pub min_deviation: f64,
    pub max_deviation: f64,
    pub n_active: usize,
    pub n_under: usize,
    pub n_over: usize,
    pub n_under_gt5: usize,
    pub n_over_gt5: usize,
}

pub const DEVIATION_THRESHOLD: f64 = 5.0;

/// Per-cell `candidate − reference`.
pub fn deviations(candidate: &FootprintGrid, reference: &FootprintGrid) -> Result<Vec<f64>> {
    if candidate.spec != reference.spec || candidate.values.len() != reference.values.len() {
        return Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            candidate.spec, reference.spec
        )));
    }
    Ok(candidate
        .values
        .iter()
        .zip(&reference.values)
        .map(|(c, r)| c - r)
        .collect())
}

/// Statistics over the cells where either grid is nonzero.
pub fn compare_footprints(
    candidate: &FootprintGrid,
    reference: &FootprintGrid,
) -> Result<FootprintComparison> {
    let dev = deviations(candidate, reference)?;
    let mut out = FootprintComparison {
        min_deviation: 0.0,
        max_deviation: 0.0,
        n_active: 0,
        n_under: 0,
        n_over: 0,
        n_under_gt5: 0,
        n_over_gt5: 0,
    };
    let mut first = true;
    for (k, d) in dev.iter().enumerate() {
        if candidate.values[k] == 0.0 && reference.values[k] == 0.0 {
            continue;
        }
        out.n_active += 1;
        if first {
            out.min_deviation = *d;
            out.max_deviation = *d;
            first = false;
        } else {
            out.min_deviation = out.min_deviation.min(*d);
            out.max_deviation = out.max_deviation.max(*d);
        }
        if *d < 0.0 {
            out.n_under += 1;
            if -d > DEVIATION_THRESHOLD {
                out.n_under_gt5 += 1;
            }
        } else if *d > 0.0 {
            out.n_over += 1;
            if *d > DEVIATION_THRESHOLD {
                out.n_over_gt5 += 1;
            }
        }
    }
    Ok(out)
}

impl FootprintComparison {
    fn fraction(&self, n: usize) -> f64 {
        if self.n_active == 0 {
            0.0
        } else {
            100.0 * n as f64 / self.n_active as f64
        }
    }

    pub fn under_gt5_fraction(&self) -> f64 {
        self.fraction(self.n_under_gt5) / 100.0
    }

    /// Key-value text, one statistic per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "minimum_deviation_pct = {}", self.min_deviation);
        let _ = writeln!(s, "maximum_deviation_pct = {}", self.max_deviation);
        let _ = writeln!(s, "active_grid_points = {}", self.n_active);
        for (key, n) in [
            ("grid_points_underestimated", self.n_under),
            ("grid_points_overestimated", self.n_over),
            ("grid_points_underestimated_gt5", self.n_under_gt5),
            ("grid_points_overestimated_gt5", self.n_over_gt5),
        ] {
            let _ = writeln!(s, "{key} = {n}");
            let _ = writeln!(s, "{key}_pct = {}", self.fraction(n));
        }
        s
    }
}

pub const GRID_HEADER: [&str; 3] = ["east_m", "north_m", "value_pct"];

/// Row-major grid CSV of cell centres and values.
pub fn write_grid<W: Write>(out: W, grid: &FootprintGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_HEADER)?;
    for j in 0..grid.spec.ny {
        for i in 0..grid.spec.nx {
            let [e, n] = grid.spec.center(i, j);
            w.write_record([e.to_string(), n.to_string(), grid.value(i, j).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a grid CSV for a known spec; cell centres must match it.
pub fn read_grid<R: Read>(input: R, spec: &GridSpec, range: f64) -> Result<FootprintGrid> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    if reader.headers()?.iter().ne(GRID_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", GRID_HEADER.join(",")),
        });
    }
    let mut values = Vec::with_capacity(spec.len());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let k = values.len();
        if k >= spec.len() {
            return Err(Error::GridMismatch(format!(
                "more than {} cells",
                spec.len()
            )));
        }
        let parse = |f: usize| -> Result<f64> {
            record
                .get(f)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("bad `{}`", GRID_HEADER[f]),
                })
        };
        let [e, n] = spec.center(k % spec.nx, k / spec.nx);
        let tol = 1e-9 * spec.cell.max(e.abs()).max(n.abs());
        if (parse(0)? - e).abs() > tol || (parse(1)? - n).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "line {line}: cell centre does not match grid"
            )));
        }
        values.push(parse(2)?);
    }
    if values.len() != spec.len() {
        return Err(Error::GridMismatch(format!(
            "{} cells, expected {}",
            values.len(),
            spec.len()
        )));
    }
    Ok(FootprintGrid {
        spec: *spec,
        range,
        values,
    })
}

/// Read a grid CSV whose spec is not known in advance. The spec is
/// recovered from the cell centres: `nx` is the length of the first row,
/// the pitch is the spacing of its first two centres (or of the first two
/// rows when `nx` is 1).
pub fn read_grid_inferred<R: Read>(input: R, range: f64) -> Result<FootprintGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    if reader.headers()?.iter().ne(GRID_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", GRID_HEADER.join(",")),
        });
    }
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = [0.0; 3];
        for (f, slot) in row.iter_mut().enumerate() {
            *slot = record
                .get(f)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("bad `{}`", GRID_HEADER[f]),
                })?;
        }
        rows.push(row);
    }
    let first = rows.first().ok_or_else(|| invalid("grid", "no cells"))?;
    let nx = rows.iter().take_while(|r| r[1] == first[1]).count();
    if !rows.len().is_multiple_of(nx) {
        return Err(Error::GridMismatch(format!(
            "{} cells do not fill rows of {nx}",
            rows.len()
        )));
    }
    let ny = rows.len() / nx;
    let cell = if nx > 1 {
        rows[1][0] - first[0]
    } else if ny > 1 {
        rows[1][1] - first[1]
    } else {
        1.0
    };
    let spec = GridSpec::new([first[0] - 0.5 * cell, first[1] - 0.5 * cell], cell, nx, ny)?;
    let mut text = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut text);
        w.write_record(GRID_HEADER)?;
        for r in &rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    read_grid(text.as_slice(), &spec, range)
}

impl GridSpec {
    /// Key-value text form, read back by [`GridSpec::from_text`].
    pub fn to_text(&self) -> String {
        format!(
            "origin_east_m = {}\norigin_north_m = {}\ncell_m = {}\nnx = {}\nny = {}\n",
            self.origin[0], self.origin[1], self.cell, self.nx, self.ny
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut get = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid("grid", format!("expected key = value: `{line}`")))?;
            get.insert(k.trim(), v.trim());
        }
        let num = |k: &str| -> Result<f64> {
            get.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| invalid("grid", format!("missing or bad `{k}`")))
        };
        let count = |k: &str| -> Result<usize> {
            get.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| invalid("grid", format!("missing or bad `{k}`")))
        };
        Self::new(
            [num("origin_east_m")?, num("origin_north_m")?],
            num("cell_m")?,
            count("nx")?,
            count("ny")?,
        )
    }
}
