use super::chi2::chi_square_ring_weight;
use crate::error::{invalid, Result};

/// One Mahalanobis ring: trajectories are placed at `radius` in each of
/// `angles` (degrees) and share the probability mass of `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub angles: Vec<f64>,
}

impl Ring {
    pub fn new(radius: f64, lower: f64, upper: f64, angles: Vec<f64>) -> Self {
        Self {
            radius,
            lower,
            upper,
            angles,
        }
    }
}

/// A placement of representative trajectories in Mahalanobis rings.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeScheme {
    name: String,
    dof: u32,
    rings: Vec<Ring>,
}

/// One trajectory of a scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeEntry {
    pub radius: f64,
    pub angle_deg: f64,
    pub weight: f64,
}

impl RepresentativeScheme {
    /// Rings must be contiguous from 0 and each radius must lie in its ring.
    pub fn new(name: impl Into<String>, dof: u32, rings: Vec<Ring>) -> Result<Self> {
        if !(dof == 1 || dof == 2) {
            return Err(invalid("dof", format!("{dof} (only 1 or 2 supported)")));
        }
        if rings.is_empty() {
            return Err(invalid("rings", "scheme has no rings"));
        }
        let mut edge = 0.0;
        for (i, ring) in rings.iter().enumerate() {
            if ring.lower != edge {
                return Err(invalid(
                    "rings",
                    format!(
                        "ring {i} starts at {} but previous ring ends at {edge}",
                        ring.lower
                    ),
                ));
            }
            if !(ring.upper > ring.lower && ring.upper.is_finite()) {
                return Err(invalid("rings", format!("ring {i} has empty interval")));
            }
            if !(ring.radius >= ring.lower && ring.radius <= ring.upper) {
                return Err(invalid(
                    "rings",
                    format!("ring {i} radius {} outside its interval", ring.radius),
                ));
            }
            if ring.angles.is_empty() || ring.angles.iter().any(|a| !a.is_finite()) {
                return Err(invalid(
                    "rings",
                    format!("ring {i} needs at least one finite angle"),
                ));
            }
            edge = ring.upper;
        }
        Ok(Self {
            name: name.into(),
            dof,
            rings,
        })
    }

    /// Lateral-only scheme: the centre and ±1, ±2 at 0°/180°, with 1-dof
    /// weights.
    pub fn flat() -> Self {
        let sides = vec![0.0, 180.0];
        Self::new(
            "flat",
            1,
            vec![
                Ring::new(0.0, 0.0, 0.5, vec![0.0]),
                Ring::new(1.0, 0.5, 1.5, sides.clone()),
                Ring::new(2.0, 1.5, 2.5, sides),
            ],
        )
        .expect("flat scheme is valid")
    }

    /// Centre plus eight directions at radii 1 and 2, with 2-dof weights.
    pub fn round() -> Self {
        let compass: Vec<f64> = (0..8).map(|k| 45.0 * k as f64).collect();
        Self::new(
            "round",
            2,
            vec![
                Ring::new(0.0, 0.0, 0.5, vec![0.0]),
                Ring::new(1.0, 0.5, 1.5, compass.clone()),
                Ring::new(2.0, 1.5, 2.5, compass),
            ],
        )
        .expect("round scheme is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    /// Trajectories in emission order (ring by ring, angles as listed).
    pub fn entries(&self) -> Vec<SchemeEntry> {
        let mut out = Vec::new();
        for ring in &self.rings {
            let weight =
                chi_square_ring_weight(self.dof, ring.lower, ring.upper, ring.angles.len())
                    .expect("rings validated on construction");
            out.extend(ring.angles.iter().map(|&angle_deg| SchemeEntry {
                radius: ring.radius,
                angle_deg,
                weight,
            }));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rings.iter().map(|r| r.angles.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.entries().iter().map(|e| e.weight).sum()
    }
}
