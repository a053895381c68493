//! Static SVG figures: top and side views of trajectories, and footprint
//! heat maps.

use std::fmt::Write as _;

use corridor_core::footprint::FootprintGrid;
use corridor_core::representative::WeightedTrajectory;
use corridor_core::track::Trajectory;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 50.0;
const RAW_STYLE: &str = r##"stroke="#999" stroke-opacity="0.25" stroke-width="0.6""##;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Maps data coordinates onto the plot area, keeping the aspect ratio when
/// `equal` is set.
struct Frame {
    lo: [f64; 2],
    scale: [f64; 2],
}

impl Frame {
    fn new(points: impl Iterator<Item = [f64; 2]>, equal: bool) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0, 0.0];
            hi = [1.0, 1.0];
        }
        let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
        let mut scale = [
            (WIDTH - 2.0 * MARGIN) / span[0],
            (HEIGHT - 2.0 * MARGIN) / span[1],
        ];
        if equal {
            let s = scale[0].min(scale[1]);
            scale = [s, s];
        }
        Self { lo, scale }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.lo[0]) * self.scale[0],
            HEIGHT - MARGIN - (p[1] - self.lo[1]) * self.scale[1],
        )
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polyline(s: &mut String, frame: &Frame, points: impl Iterator<Item = [f64; 2]>, style: &str) {
    let coords: Vec<String> = points
        .map(|p| {
            let (x, y) = frame.map(p);
            format!("{x:.1},{y:.1}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" {style} points="{}"/>"#,
        coords.join(" ")
    );
}

fn axis_labels(s: &mut String, x: &str, y: &str) {
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{x}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 15 {})">{y}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

fn color(cluster: usize) -> &'static str {
    PALETTE[cluster % PALETTE.len()]
}

/// Stroke width of a representative, growing with its weight.
fn rep_width(weight: f64) -> f64 {
    0.8 + 6.0 * weight
}

/// Ground tracks of the raw trajectories (thin, grey) with the
/// representatives drawn over them in their cluster colour.
pub fn top_view(raw: &[(usize, &Trajectory)], reps: &[WeightedTrajectory], title: &str) -> String {
    let pts = raw
        .iter()
        .flat_map(|(_, t)| t.points().iter().map(|p| [p.east, p.north]))
        .chain(
            reps.iter()
                .flat_map(|r| r.points.iter().map(|p| [p[0], p[1]])),
        );
    let frame = Frame::new(pts, true);
    let mut s = header(title);
    for (_, t) in raw {
        polyline(
            &mut s,
            &frame,
            t.points().iter().map(|p| [p.east, p.north]),
            RAW_STYLE,
        );
    }
    for r in reps {
        let style = format!(
            r#"stroke="{}" stroke-width="{:.2}""#,
            color(r.cluster),
            rep_width(r.weight)
        );
        polyline(
            &mut s,
            &frame,
            r.points.iter().map(|p| [p[0], p[1]]),
            &style,
        );
    }
    axis_labels(&mut s, "east (m)", "north (m)");
    s.push_str("</svg>\n");
    s
}

fn along_track(points: impl Iterator<Item = [f64; 3]>) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut dist = 0.0;
    let mut prev: Option<[f64; 3]> = None;
    for p in points {
        if let Some(q) = prev {
            dist += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        }
        out.push([dist, p[2]]);
        prev = Some(p);
    }
    out
}

/// Altitude against ground distance flown.
pub fn side_view(raw: &[(usize, &Trajectory)], reps: &[WeightedTrajectory], title: &str) -> String {
    let raw_profiles: Vec<Vec<[f64; 2]>> = raw
        .iter()
        .map(|(_, t)| along_track(t.points().iter().map(|p| p.position())))
        .collect();
    let rep_profiles: Vec<Vec<[f64; 2]>> = reps
        .iter()
        .map(|r| along_track(r.points.iter().map(|p| [p[0], p[1], p[2]])))
        .collect();
    let frame = Frame::new(
        raw_profiles.iter().chain(&rep_profiles).flatten().copied(),
        false,
    );
    let mut s = header(title);
    for p in &raw_profiles {
        polyline(&mut s, &frame, p.iter().copied(), RAW_STYLE);
    }
    for (r, p) in reps.iter().zip(&rep_profiles) {
        let style = format!(
            r#"stroke="{}" stroke-width="{:.2}""#,
            color(r.cluster),
            rep_width(r.weight)
        );
        polyline(&mut s, &frame, p.iter().copied(), &style);
    }
    axis_labels(&mut s, "distance flown (m)", "altitude (m)");
    s.push_str("</svg>\n");
    s
}

/// White through yellow to dark red.
fn ramp(v: f64) -> String {
    let t = (v / 100.0).clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (255.0, 255.0 - 40.0 * u, 255.0 - 255.0 * u)
    } else {
        let u = (t - 0.5) / 0.5;
        (255.0 - 115.0 * u, 215.0 - 215.0 * u, 0.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// One rectangle per nonzero cell, coloured by percentage.
pub fn heat_map(grid: &FootprintGrid, title: &str) -> String {
    let spec = grid.spec;
    let corners = [
        spec.origin,
        [
            spec.origin[0] + spec.cell * spec.nx as f64,
            spec.origin[1] + spec.cell * spec.ny as f64,
        ],
    ];
    let frame = Frame::new(corners.into_iter(), true);
    let side = spec.cell * frame.scale[0];
    let mut s = header(title);
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let v = grid.value(i, j);
            if v == 0.0 {
                continue;
            }
            let (x, y) = frame.map([
                spec.origin[0] + i as f64 * spec.cell,
                spec.origin[1] + (j + 1) as f64 * spec.cell,
            ]);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{side:.2}" height="{side:.2}" fill="{}"/>"#,
                ramp(v)
            );
        }
    }
    let (x0, y0) = frame.map(corners[0]);
    let (x1, y1) = frame.map(corners[1]);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="0.5"/>"#,
        x1 - x0,
        y0 - y1
    );
    axis_labels(&mut s, "east (m)", "north (m)");
    s.push_str("</svg>\n");
    s
}
