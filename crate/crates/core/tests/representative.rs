use corridor_core::gp::{BasisSet, NormalizationTransform, TrajectoryModel};
use corridor_core::representative::{
    chi_square_ring_weight, generate_representatives, mahalanobis_sq, plane_ellipsoid_intersection,
    representative_point_at, section_plane, Ellipsoid, GenerationSettings, ModelSections,
    RepresentativeScheme, SearchWindow, SectionPlane,
};
use corridor_core::synth::{random_model_params, rng};
use corridor_core::Exec;
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;

/// A random smooth model mapped to a 5 km × 5 km × 400 m box.
fn model(seed: u64) -> TrajectoryModel {
    let basis = BasisSet::uniform(6).unwrap();
    let params = random_model_params(&basis, 2e3, &mut rng(seed));
    let transform = NormalizationTransform {
        offset: [-2500.0, 1000.0, 0.0],
        scale: [5000.0, 5000.0, 400.0],
    };
    TrajectoryModel::from_params(params, basis, transform, 50)
}

fn settings(steps: usize) -> GenerationSettings {
    GenerationSettings {
        steps,
        ..GenerationSettings::default()
    }
}

#[test]
fn scheme_sizes_and_shapes() {
    let m = model(1);
    for (scheme, count) in [
        (RepresentativeScheme::flat(), 5),
        (RepresentativeScheme::round(), 17),
    ] {
        let reps =
            generate_representatives(&m, &scheme, 4, &settings(40), Exec::Sequential).unwrap();
        assert_eq!(reps.len(), count);
        assert!(reps
            .iter()
            .all(|r| r.points.len() == 40 && r.sources.len() == 40 && r.cluster == 4));
        let total: f64 = reps.iter().map(|r| r.weight).sum();
        assert!((total - scheme.total_weight()).abs() < 1e-15);
    }
}

#[test]
fn points_lie_on_their_source_ellipsoid() {
    for seed in 0..4 {
        let m = model(seed);
        let s = settings(60);
        let sections = ModelSections::from_model(&m, &s.taus(), s.d_tau, Exec::Sequential).unwrap();
        let reps =
            generate_representatives(&m, &RepresentativeScheme::round(), 0, &s, Exec::Sequential)
                .unwrap();
        for r in reps.iter().filter(|r| r.radius > 0.0) {
            for (i, (p, &src)) in r.points.iter().zip(&r.sources).enumerate() {
                let md2 = mahalanobis_sq(p, &sections.mean(src), &sections.precision(src));
                let want = r.radius * r.radius;
                assert!(
                    (md2 - want).abs() <= 1e-6 * want,
                    "seed {seed} step {i}: {md2} vs {want}"
                );
                // The point stays in its own section plane.
                let plane = sections.plane(i);
                assert!(plane.signed_distance(p).abs() <= 1e-6 * (p - plane.point).norm().max(1.0));
            }
        }
    }
}

#[test]
fn zero_radius_is_the_mean_path() {
    let m = model(7);
    let s = settings(50);
    let reps = generate_representatives(&m, &RepresentativeScheme::flat(), 0, &s, Exec::Sequential)
        .unwrap();
    for (p, tau) in reps[0].points.iter().zip(s.taus()) {
        assert!((p - m.real_section(tau).mean).amax() <= 1e-9);
    }
}

#[test]
fn own_section_is_point_symmetric() {
    let m = model(3);
    let s = settings(30);
    let sections = ModelSections::from_model(&m, &s.taus(), s.d_tau, Exec::Sequential).unwrap();
    for i in 0..sections.len() {
        for angle in [0.0, 30.0, 90.0, 135.0, 200.0] {
            for radius in [1.0, 2.0] {
                let a =
                    representative_point_at(&sections, i, radius, angle, SearchWindow::Steps(0))
                        .unwrap();
                let b = representative_point_at(
                    &sections,
                    i,
                    radius,
                    angle + 180.0,
                    SearchWindow::Steps(0),
                )
                .unwrap();
                assert!((a.deviation - b.deviation).abs() <= 1e-9 * a.deviation);
                let mid = (a.position + b.position) / 2.0;
                assert!((mid - sections.mean(i)).amax() <= 1e-9 * a.deviation.max(1.0));
            }
        }
    }
}

#[test]
fn flat_scheme_is_mirror_symmetric_on_a_level_straight_corridor() {
    // A straight level corridor whose section covariance is symmetric about
    // the vertical plane through the path.
    let n = 21;
    let taus: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let means: Vec<_> = taus
        .iter()
        .map(|t| Vector3::new(3000.0 * t, 0.0, 150.0))
        .collect();
    let covs: Vec<_> = taus
        .iter()
        .map(|t| Matrix3::from_diagonal(&Vector3::new(100.0, 400.0 * (1.0 + t), 25.0 + 50.0 * t)))
        .collect();
    let planes = means
        .iter()
        .map(|m| SectionPlane::from_direction(*m, Vector3::new(1.0, 0.0, 0.0)).unwrap())
        .collect();
    let sections = ModelSections::from_parts(taus, means, covs, planes).unwrap();
    for i in 0..n {
        for r in [1.0, 2.0] {
            let left = representative_point_at(&sections, i, r, 180.0, SearchWindow::All).unwrap();
            let right = representative_point_at(&sections, i, r, 0.0, SearchWindow::All).unwrap();
            assert!((left.position[1] + right.position[1]).abs() <= 1e-9 * right.deviation);
            assert!((left.position[0] - right.position[0]).abs() <= 1e-9);
            assert!((left.position[2] - right.position[2]).abs() <= 1e-9);
        }
    }
}

#[test]
fn wider_search_never_shrinks_deviation() {
    for seed in 0..3 {
        let m = model(seed + 20);
        let s = settings(40);
        let sections = ModelSections::from_model(&m, &s.taus(), s.d_tau, Exec::Sequential).unwrap();
        for i in (0..sections.len()).step_by(3) {
            for angle in [0.0, 60.0, 90.0, 225.0] {
                let mut prev = 0.0;
                let windows = (0..6).map(SearchWindow::Steps).chain([SearchWindow::All]);
                for w in windows {
                    let d = representative_point_at(&sections, i, 2.0, angle, w)
                        .unwrap()
                        .deviation;
                    assert!(d >= prev, "window {w:?}: {d} < {prev}");
                    prev = d;
                }
            }
        }
    }
}

#[test]
fn sequential_and_parallel_generation_agree() {
    let m = model(9);
    let s = settings(80);
    let a = generate_representatives(&m, &RepresentativeScheme::round(), 1, &s, Exec::Sequential)
        .unwrap();
    let b = generate_representatives(&m, &RepresentativeScheme::round(), 1, &s, Exec::Parallel)
        .unwrap();
    assert_eq!(a, b);
}

/// Composite Simpson rule.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

#[test]
fn ring_mass_matches_numerical_integration() {
    // Mass between radii l and u: two normal tails for one dof, the Rayleigh
    // density for two.
    let lateral = |r: f64| 2.0 * (-r * r / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let radial = |r: f64| r * (-r * r / 2.0).exp();
    for (lo, hi) in [(0.0, 0.5), (0.5, 1.5), (1.5, 2.5), (0.2, 3.7), (2.5, 6.0)] {
        let one = simpson(lateral, lo, hi, 4000);
        let two = simpson(radial, lo, hi, 4000);
        assert!((chi_square_ring_weight(1, lo, hi, 1).unwrap() - one).abs() < 1e-12);
        assert!((chi_square_ring_weight(2, lo, hi, 1).unwrap() - two).abs() < 1e-12);
        assert!((chi_square_ring_weight(2, lo, hi, 8).unwrap() - two / 8.0).abs() < 1e-12);
    }
}

/// Unit path direction from the analytic derivative of the mean.
fn exact_direction(m: &TrajectoryModel, tau: f64) -> Vector3<f64> {
    let j = m.basis.count();
    let w2 = m.basis.width().powi(2);
    let v = m.basis.values(tau);
    let mut dv = vec![0.0; j];
    for (k, c) in m.basis.centers().iter().enumerate() {
        dv[k + 1] = -(tau - c) / w2 * v[k + 1];
    }
    Vector3::from_fn(|d, _| {
        m.transform.scale[d] * (0..j).map(|k| dv[k] * m.mu[d * j + k]).sum::<f64>()
    })
    .normalize()
}

#[test]
fn section_normal_converges_quadratically() {
    let m = model(5);
    for tau in [0.2, 0.45, 0.8] {
        let exact = exact_direction(&m, tau);
        let err = |h: f64| (section_plane(&m, tau, h).unwrap().normal - exact).norm();
        let (e1, e2, e3) = (err(0.04), err(0.02), err(0.01));
        for ratio in [e1 / e2, e2 / e3] {
            assert!(
                (3.5..4.5).contains(&ratio),
                "tau {tau}: ratio {ratio} ({e1}, {e2}, {e3})"
            );
        }
        assert!(err(1e-4) < 1e-7, "{}", err(1e-4));
    }
}

fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..3.1)
        .prop_filter("axis", |(x, y, z, _)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z, a)| Rotation3::new(Vector3::new(x, y, z).normalize() * a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn principal_sections_have_analytic_semi_axes(
        rot in rotation(),
        axes in (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0),
        radius in 0.2f64..3.0,
        offset in -0.95f64..0.95,
        center in (-100.0f64..100.0, -100.0f64..100.0, -100.0f64..100.0),
    ) {
        let (a, b, c) = axes;
        let r = rot.matrix();
        let shape = r * Matrix3::from_diagonal(&Vector3::new(a * a, b * b, c * c)) * r.transpose();
        let center = Vector3::new(center.0, center.1, center.2);
        let e = Ellipsoid::new(center, shape, radius).unwrap();
        // Plane normal to the first principal axis, `offset` of the way to
        // the tip of the ellipsoid.
        let axis = r.column(0).into_owned();
        let plane = SectionPlane::from_direction(center + axis * (offset * radius * a), axis).unwrap();
        let s = plane_ellipsoid_intersection(&e, &plane).unwrap().unwrap();
        let shrink = (1.0 - offset * offset).sqrt();
        let want = [radius * b.max(c) * shrink, radius * b.min(c) * shrink];
        let got = s.semi_axis_lengths();
        for k in 0..2 {
            prop_assert!((got[k] - want[k]).abs() <= 1e-8 * want[0], "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn section_points_satisfy_the_quadric(
        rot in rotation(),
        axes in (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0),
        radius in 0.2f64..3.0,
        dir in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    ) {
        let dir = Vector3::new(dir.0, dir.1, dir.2);
        prop_assume!(dir.norm() > 0.1);
        let (a, b, c) = axes;
        let r = rot.matrix();
        let shape = r * Matrix3::from_diagonal(&Vector3::new(a * a, b * b, c * c)) * r.transpose();
        let e = Ellipsoid::new(Vector3::zeros(), shape, radius).unwrap();
        let plane = SectionPlane::from_direction(Vector3::zeros(), dir).unwrap();
        let s = plane_ellipsoid_intersection(&e, &plane).unwrap().unwrap();
        for k in 0..16 {
            let p = plane.to_world(s.point(k as f64 * 0.4));
            prop_assert!((e.mahalanobis_sq(&p) - radius * radius).abs() <= 1e-8 * radius * radius);
        }
    }
}
