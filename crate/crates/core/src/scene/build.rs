//! Object and rope construction: sphere filling, mass-property integration,
//! centerline discretization, splat seeding and anchoring.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::collision::GroundPlane;
use crate::math::{real, Pose, Real};
use crate::pbd::{compute_darboux, Particle, Rod, Segment};
use crate::splat::{Anchor, Gaussian3D};

use super::shape::{Shape, Texture};
use super::SceneError;

/// Collision-sphere radius used for object filling (5 mm).
pub const FILL_SPHERE_RADIUS: f64 = 0.005;
/// Default fill grid pitch: one sphere diameter, so spheres tile without
/// overlap.
pub const DEFAULT_GRID_PITCH: f64 = 0.01;

/// Fills a shape with a regular grid of spheres.
///
/// Grid cells are anchored to the shape's local bounding box; a center is
/// kept when the occupancy test passes and, if a ground plane is given, when
/// the world-space center is not below it. Returns local-frame
/// `(center, radius)` pairs.
pub fn fill_spheres<T: Real>(
    shape: &Shape<T>,
    grid_pitch: T,
    pose: &Pose<T>,
    ground: Option<&GroundPlane<T>>,
) -> Result<Vec<(Vector3<T>, T)>, SceneError> {
    assert!(grid_pitch > T::zero());
    let (min, max) = shape.bbox();
    let radius = real::<T>(FILL_SPHERE_RADIUS);
    let half = real::<T>(0.5);
    let counts: Vec<usize> = (0..3)
        .map(|k| {
            let span = (max[k] - min[k]) / grid_pitch;
            // round to absorb the floating-point representation of extents
            let n = (span + real::<T>(1e-9)).floor().to_usize().unwrap_or(0);
            n.max(1)
        })
        .collect();
    let mut out = Vec::new();
    for ix in 0..counts[0] {
        for iy in 0..counts[1] {
            for iz in 0..counts[2] {
                let center = Vector3::new(
                    min.x + grid_pitch * (T::from_usize(ix).unwrap() + half),
                    min.y + grid_pitch * (T::from_usize(iy).unwrap() + half),
                    min.z + grid_pitch * (T::from_usize(iz).unwrap() + half),
                );
                if !shape.contains(&center) {
                    continue;
                }
                if let Some(plane) = ground {
                    if plane.signed_distance(&pose.transform_point(&center)) < T::zero() {
                        continue;
                    }
                }
                out.push((center, radius));
            }
        }
    }
    if out.is_empty() {
        return Err(SceneError::EmptyObject);
    }
    Ok(out)
}

/// Mass, center of mass, and inertia tensor (about the COM) of a solid-
/// sphere compound at uniform density.
pub fn compute_mass_properties<T: Real>(
    spheres: &[(Vector3<T>, T)],
    density: T,
) -> (T, Vector3<T>, Matrix3<T>) {
    assert!(!spheres.is_empty());
    let four_thirds_pi = real::<T>(4.0 / 3.0) * T::pi();
    let masses: Vec<T> =
        spheres.iter().map(|(_, r)| density * four_thirds_pi * *r * *r * *r).collect();
    let total: T = masses.iter().fold(T::zero(), |a, b| a + *b);
    let mut com = Vector3::zeros();
    for ((c, _), m) in spheres.iter().zip(&masses) {
        com += c * *m;
    }
    com /= total;

    let two_fifths = real::<T>(0.4);
    let mut inertia = Matrix3::zeros();
    for ((c, r), m) in spheres.iter().zip(&masses) {
        let i_own = two_fifths * *m * *r * *r;
        inertia += Matrix3::identity() * i_own;
        let d = c - com;
        // parallel axis: m (|d|^2 I - d d^T)
        inertia += (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * *m;
    }
    (total, com, inertia)
}

/// Resamples a polyline centerline into an evenly spaced rod: particles by
/// arc length, chord-aligned segment frames transported without twist, rest
/// lengths from the chords, and rest Darboux vectors from adjacent frames.
pub fn discretize_centerline<T: Real>(
    samples: &[Vector3<T>],
    segment_count: usize,
    radius: T,
    linear_density: T,
) -> Result<Rod<T>, SceneError> {
    assert!(segment_count >= 2, "segment_count must be at least 2");
    assert!(samples.len() >= 2, "centerline needs at least two samples");

    // cumulative arc length over the input polyline
    let mut cum = vec![T::zero()];
    for w in samples.windows(2) {
        let l = (w[1] - w[0]).norm();
        cum.push(*cum.last().unwrap() + l);
    }
    let total = *cum.last().unwrap();
    if total <= T::zero() {
        return Err(SceneError::TooShortCurve);
    }

    let n_particles = segment_count + 1;
    let mut positions = Vec::with_capacity(n_particles);
    for k in 0..n_particles {
        let s = total * T::from_usize(k).unwrap() / T::from_usize(segment_count).unwrap();
        positions.push(sample_polyline(samples, &cum, s));
    }

    let rest_lengths: Vec<T> =
        positions.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let min_chord = rest_lengths.iter().fold(total, |a, b| a.min(*b));
    if min_chord < radius * real::<T>(2.0) {
        return Err(SceneError::TooShortCurve);
    }

    // chord-aligned frames, parallel transported to avoid twist
    let e3 = Vector3::new(T::zero(), T::zero(), T::one());
    let mut orientations: Vec<UnitQuaternion<T>> = Vec::with_capacity(segment_count);
    for k in 0..segment_count {
        let tangent = (positions[k + 1] - positions[k]).normalize();
        let q = if k == 0 {
            rotation_to(&e3, &tangent)
        } else {
            let prev_t = (positions[k] - positions[k - 1]).normalize();
            rotation_to(&prev_t, &tangent) * orientations[k - 1]
        };
        orientations.push(q);
    }

    let particles: Vec<Particle<T>> = positions
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut share = T::zero();
            if k > 0 {
                share += rest_lengths[k - 1] * real::<T>(0.5);
            }
            if k < segment_count {
                share += rest_lengths[k] * real::<T>(0.5);
            }
            Particle::new(linear_density * share, *p, radius)
        })
        .collect();

    let segments: Vec<Segment<T>> = orientations
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let l = rest_lengths[k];
            // scalar rotational mass m_q = m_segment * l^2 / 4
            let m_q = linear_density * l * l * l / real::<T>(4.0);
            Segment {
                orientation: *q,
                angular_velocity: Vector3::zeros(),
                inv_mq: T::one() / m_q,
                prev_orientation: *q,
            }
        })
        .collect();

    let rest_darboux: Vec<Vector3<T>> = (0..segment_count.saturating_sub(1))
        .map(|k| {
            let l_avg = (rest_lengths[k] + rest_lengths[k + 1]) * real::<T>(0.5);
            compute_darboux(&orientations[k], &orientations[k + 1], l_avg)
        })
        .collect();

    Ok(Rod {
        name: String::new(),
        particles,
        segments,
        rest_lengths,
        rest_darboux,
        radius,
    })
}

fn sample_polyline<T: Real>(samples: &[Vector3<T>], cum: &[T], s: T) -> Vector3<T> {
    if s <= T::zero() {
        return samples[0];
    }
    let total = *cum.last().unwrap();
    if s >= total {
        return *samples.last().unwrap();
    }
    let mut i = 0;
    while cum[i + 1] < s {
        i += 1;
    }
    let seg_len = cum[i + 1] - cum[i];
    let t = if seg_len > T::zero() { (s - cum[i]) / seg_len } else { T::zero() };
    samples[i] + (samples[i + 1] - samples[i]) * t
}

/// Minimal rotation taking unit vector `from` onto unit vector `to`.
fn rotation_to<T: Real>(from: &Vector3<T>, to: &Vector3<T>) -> UnitQuaternion<T> {
    UnitQuaternion::rotation_between(from, to).unwrap_or_else(|| {
        // antiparallel: rotate half a turn about any perpendicular axis
        let axis = if from.x.abs() < real::<T>(0.9) {
            from.cross(&Vector3::x()).normalize()
        } else {
            from.cross(&Vector3::y()).normalize()
        };
        UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), T::pi())
    })
}

/// Nearest-sphere anchor index per gaussian position; equidistant ties take
/// the lowest sphere index.
pub fn anchor_gaussians<T: Real>(
    positions: &[Vector3<T>],
    sphere_centers: &[Vector3<T>],
) -> Vec<usize> {
    assert!(!sphere_centers.is_empty());
    positions
        .iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_d = (p - sphere_centers[0]).norm_squared();
            for (i, c) in sphere_centers.iter().enumerate().skip(1) {
                let d = (p - c).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Samples `count_per_sphere` splats on the surface of every local-frame
/// sphere. Scales sit near half the sphere radius, opacity in `(0.5, 1]`,
/// colors from the texture. Positions are local; the caller maps them
/// through the object pose and fills in anchor frames.
pub fn seed_gaussians_local(
    spheres: &[(Vector3<f64>, f64)],
    texture: &Texture,
    count_per_sphere: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Gaussian3D<f64>> {
    assert!(count_per_sphere >= 1);
    let mut out = Vec::with_capacity(spheres.len() * count_per_sphere);
    for (center, radius) in spheres {
        let sphere_color = match texture {
            Texture::Palette { colors } => Some(colors[rng.gen_range(0..colors.len())]),
            _ => None,
        };
        for _ in 0..count_per_sphere {
            let dir = loop {
                let v = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            };
            let pos = center + dir * *radius;
            let orientation = {
                let q = Quaternion::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if q.norm() > 1e-2 {
                    UnitQuaternion::new_normalize(q)
                } else {
                    UnitQuaternion::identity()
                }
            };
            let base = radius * 0.5;
            let scale = Vector3::new(
                base * rng.gen_range(0.8..1.2),
                base * rng.gen_range(0.8..1.2),
                base * rng.gen_range(0.8..1.2),
            );
            let opacity = 1.0 - rng.gen_range(0.0..0.5);
            out.push(Gaussian3D {
                mean: pos,
                orientation,
                scale,
                opacity,
                color: texture.sample(&pos, sphere_color),
                anchor: Anchor::unanchored(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn cube_fills_4x4x4() {
        let shape = Shape::Box { extents: Vector3::new(0.04, 0.04, 0.04) };
        let spheres = fill_spheres(&shape, 0.01, &Pose::identity(), None).unwrap();
        assert_eq!(spheres.len(), 64);
        for (_, r) in &spheres {
            assert_eq!(*r, FILL_SPHERE_RADIUS);
        }
    }

    #[test]
    fn degenerate_box_is_empty_object() {
        // zero-occupancy shape: a box thinner than any grid cell placed off
        // the grid plane produces no inside centers
        let shape = Shape::Boxes(vec![super::super::shape::BoxPart {
            center: Vector3::new(0.0, 0.0, 1.0),
            extents: Vector3::new(1e-9, 1e-9, 1e-9),
        }]);
        assert!(matches!(
            fill_spheres(&shape, 0.01, &Pose::identity(), None),
            Err(SceneError::EmptyObject)
        ));
    }

    #[test]
    fn sphere_count_invariant_under_translation() {
        let shape = Shape::Tee {
            bar: Vector3::new(0.08, 0.02, 0.04),
            stem: Vector3::new(0.02, 0.06, 0.04),
        };
        let a = fill_spheres(&shape, 0.01, &Pose::identity(), None).unwrap();
        let moved = Pose::new(Vector3::new(0.13, -0.07, 0.02), UnitQuaternion::identity());
        let b = fill_spheres(&shape, 0.01, &moved, None).unwrap();
        // grid is anchored to the local bbox, so any rigid translation of
        // the spec preserves the count
        assert_eq!(a.len(), b.len());
    }

    #[test]
    fn ground_plane_filters_spheres() {
        let shape = Shape::Box { extents: Vector3::new(0.04, 0.04, 0.04) };
        let ground = GroundPlane::horizontal(0.0);
        // centered at origin: lower half of centers are below the plane
        let spheres =
            fill_spheres(&shape, 0.01, &Pose::identity(), Some(&ground)).unwrap();
        assert_eq!(spheres.len(), 32);
    }

    #[test]
    fn single_sphere_mass_properties() {
        let (m, com, i) =
            compute_mass_properties(&[(Vector3::zeros(), 0.005f64)], 1000.0);
        assert_relative_eq!(m, 1000.0 * 4.0 / 3.0 * std::f64::consts::PI * 0.005f64.powi(3));
        assert_relative_eq!(m, 5.236e-4, epsilon = 1e-6);
        assert_eq!(com, Vector3::zeros());
        let expect = 0.4 * m * 0.005 * 0.005;
        assert_relative_eq!(i, Matrix3::identity() * expect, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_pair_com_at_origin() {
        let spheres = vec![
            (Vector3::new(0.01, 0.0, 0.0), 0.005f64),
            (Vector3::new(-0.01, 0.0, 0.0), 0.005f64),
        ];
        let (_, com, _) = compute_mass_properties(&spheres, 500.0);
        assert!(com.norm() < 1e-15);
    }

    #[test]
    fn cube_inertia_close_to_analytic() {
        let shape = Shape::Box { extents: Vector3::new(0.04, 0.04, 0.04) };
        let spheres = fill_spheres(&shape, 0.01, &Pose::identity(), None).unwrap();
        let (m, com, i) = compute_mass_properties(&spheres, 800.0);
        assert!(com.norm() < 1e-12);
        let analytic = m / 12.0 * (0.04f64.powi(2) + 0.04f64.powi(2));
        for k in 0..3 {
            let rel = (i[(k, k)] - analytic).abs() / analytic;
            assert!(rel < 0.10, "axis {k}: {} vs {} ({rel:.3})", i[(k, k)], analytic);
        }
    }

    #[test]
    fn density_scales_mass_and_inertia_linearly() {
        let shape = Shape::Cylinder { radius: 0.02, height: 0.04 };
        let spheres = fill_spheres(&shape, 0.01, &Pose::identity(), None).unwrap();
        let (m1, com1, i1) = compute_mass_properties(&spheres, 400.0);
        let (m2, com2, i2) = compute_mass_properties(&spheres, 800.0);
        assert_relative_eq!(m2, 2.0 * m1, epsilon = 1e-12);
        assert_relative_eq!(com1, com2, epsilon = 1e-15);
        assert_relative_eq!(i2, i1 * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn straight_rope_discretization() {
        let samples = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)];
        let rod = discretize_centerline(&samples, 10, 0.005, 0.05).unwrap();
        assert_eq!(rod.particles.len(), 11);
        assert_eq!(rod.segments.len(), 10);
        assert_eq!(rod.rest_darboux.len(), 9);
        for l in &rod.rest_lengths {
            assert_relative_eq!(*l, 0.1, epsilon = 1e-12);
        }
        // all frames equal and rest Darboux zero on a straight line
        for s in &rod.segments {
            assert!(
                crate::math::geodesic_angle(&s.orientation, &rod.segments[0].orientation) < 1e-12
            );
        }
        for o in &rod.rest_darboux {
            assert!(o.norm() < 1e-12);
        }
        // total mass = linear density * length
        let total: f64 = rod.particles.iter().map(|p| p.mass).sum();
        assert_relative_eq!(total, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn rest_constraints_vanish_at_rest() {
        // wavy centerline: rest configuration must satisfy both constraints
        let samples: Vec<Vector3<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 / 199.0;
                Vector3::new(t * 0.5, 0.05 * (t * 8.0).sin(), 0.02 * (t * 5.0).cos())
            })
            .collect();
        let rod = discretize_centerline(&samples, 15, 0.004, 0.05).unwrap();
        for k in 0..rod.segments.len() {
            let d3 = rod.segments[k].orientation.transform_vector(&Vector3::z());
            let c = (rod.particles[k + 1].position - rod.particles[k].position)
                / rod.rest_lengths[k]
                - d3;
            assert!(c.norm() < 1e-9, "shear-stretch violation {:.3e} at {k}", c.norm());
        }
        for k in 0..rod.rest_darboux.len() {
            let l_avg = 0.5 * (rod.rest_lengths[k] + rod.rest_lengths[k + 1]);
            let omega = compute_darboux(
                &rod.segments[k].orientation,
                &rod.segments[k + 1].orientation,
                l_avg,
            );
            assert!((omega - rod.rest_darboux[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn quarter_circle_rest_darboux_matches_curvature() {
        let r = 0.2;
        let samples: Vec<Vector3<f64>> = (0..400)
            .map(|i| {
                let a = std::f64::consts::FRAC_PI_2 * i as f64 / 399.0;
                Vector3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect();
        let rod = discretize_centerline(&samples, 12, 0.004, 0.05).unwrap();
        let curvature = 1.0 / r;
        for o in &rod.rest_darboux {
            let rel = (o.norm() - curvature).abs() / curvature;
            assert!(rel < 0.05, "darboux magnitude {} vs curvature {curvature}", o.norm());
        }
        // constant along the arc
        for w in rod.rest_darboux.windows(2) {
            assert!((w[0].norm() - w[1].norm()).abs() / curvature < 0.01);
        }
    }

    #[test]
    fn too_short_curve_errors() {
        let samples = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.01, 0.0, 0.0)];
        assert!(matches!(
            discretize_centerline(&samples, 10, 0.005, 0.05),
            Err(SceneError::TooShortCurve)
        ));
    }

    #[test]
    fn anchors_nearest_with_tie_break() {
        let spheres = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.01, 0.0, 0.0),
            Vector3::new(0.02, 0.0, 0.0),
        ];
        // exactly at a center
        assert_eq!(anchor_gaussians(&[spheres[1]], &spheres), vec![1]);
        // equidistant between 0 and 1: lowest index wins
        assert_eq!(anchor_gaussians(&[Vector3::new(0.005, 0.0, 0.0)], &spheres), vec![0]);
    }

    #[test]
    fn anchors_match_bruteforce_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spheres: Vec<Vector3<f64>> = (0..40)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                )
            })
            .collect();
        let points: Vec<Vector3<f64>> = (0..200)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-0.06..0.06),
                    rng.gen_range(-0.06..0.06),
                    rng.gen_range(-0.06..0.06),
                )
            })
            .collect();
        let got = anchor_gaussians(&points, &spheres);
        for (p, a) in points.iter().zip(&got) {
            let brute = spheres
                .iter()
                .enumerate()
                .min_by(|(_, x), (_, y)| {
                    (p - *x).norm().partial_cmp(&(p - *y).norm()).unwrap()
                })
                .unwrap()
                .0;
            assert_eq!(*a, brute);
        }
    }

    #[test]
    fn seeded_gaussians_are_deterministic_and_valid() {
        let spheres = vec![(Vector3::new(0.0, 0.0, 0.0), 0.005f64)];
        let tex = Texture::Solid { color: [0.3, 0.5, 0.7] };
        let mut rng1 = ChaCha8Rng::seed_from_u64(9);
        let mut rng2 = ChaCha8Rng::seed_from_u64(9);
        let a = seed_gaussians_local(&spheres, &tex, 4, &mut rng1);
        let b = seed_gaussians_local(&spheres, &tex, 4, &mut rng2);
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean, y.mean);
            assert_eq!(x.opacity, y.opacity);
        }
        for g in &a {
            assert!((g.mean - spheres[0].0).norm() <= 0.005 + 1e-12);
            assert!(g.opacity > 0.5 && g.opacity <= 1.0);
            assert!(g.scale.x > 0.0 && g.scale.y > 0.0 && g.scale.z > 0.0);
        }
    }

    #[test]
    fn single_count_on_single_sphere() {
        let spheres = vec![(Vector3::new(0.02, 0.0, 0.01), 0.005f64)];
        let tex = Texture::Solid { color: [1.0, 1.0, 1.0] };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gs = seed_gaussians_local(&spheres, &tex, 1, &mut rng);
        assert_eq!(gs.len(), 1);
        assert!((gs[0].mean - spheres[0].0).norm() <= 0.005 + 1e-12);
    }
}
