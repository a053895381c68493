//! Weighted representative trajectories from a fitted corridor model.
//!
//! At each sample time the model gives a Gaussian section N(m, k). A
//! trajectory at Mahalanobis radius r and in-plane angle θ follows the point
//! where the ray from m at angle θ, in the plane normal to the mean path,
//! leaves the farthest r-ellipsoid of the model that the plane cuts. Each
//! trajectory carries the chi-square mass of its ring, split evenly over the
//! ring's angles.

mod chi2;
mod generate;
mod geometry;
mod scheme;

pub use chi2::{chi_square_cdf, chi_square_ring_weight};
pub use generate::{
    generate_from_sections, generate_representatives, read_representatives, representative_point,
    representative_point_at, sample_taus, write_representatives, GenerationSettings, ModelSections,
    RepresentativePoint, SearchWindow, WeightedTrajectory, REPRESENTATIVE_HEADER,
};
pub use geometry::{
    eigendecompose, mahalanobis_sq, plane_ellipsoid_intersection, section_plane, EigenFrame,
    Ellipsoid, SectionEllipse, SectionPlane,
};
pub use scheme::{RepresentativeScheme, Ring, SchemeEntry};
