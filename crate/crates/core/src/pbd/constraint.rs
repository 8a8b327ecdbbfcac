//! Specialized constraint solvers: rigid-rigid contact, rigid-particle
//! contact, shear-stretch, and bend-twist.
//!
//! Sign conventions follow the generic Lagrangian projection in
//! [`super::project`] with the contact constraint written as the signed gap
//! `C = n · (b_b - b_a)` (normal pointing a → b). Note the published contact
//! update formulas carry the opposite sign on the position terms; the
//! directions used here are the ones that reduce `|C|` and they are enforced
//! against the generic projection by the oracle test suite.
//!
//! Rod constraints follow the quaternion-space projection of position-based
//! Cosserat rods: the quaternion state enters as a free R^4 block with
//! isotropic inverse mass `1/m_q`, which yields the closed-form denominators
//! `w_i + w_j + 4 w_q l^2` (shear-stretch) and `w_i + w_j` (bend-twist).

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::collision::{ContactKind, ContactPair, EntityRef};
use crate::math::{imag, pure_quaternion, quat_rotate, real, Real};

use super::accumulator::DeltaAccumulator;
use super::state::{RigidBody, Rod, World};

/// Effective inverse mass of a body along direction `n` through lever `r`
/// (world frame): `1/m + (r x n)^T I^-1 (r x n)`.
pub fn generalized_inverse_mass<T: Real>(
    body: &RigidBody<T>,
    r: &Vector3<T>,
    n: &Vector3<T>,
) -> T {
    let rxn = r.cross(n);
    body.inv_mass + rxn.dot(&(body.inv_inertia_world() * rxn))
}

/// One side of a contact, resolved to the quantities the projection needs.
enum Side<T: Real> {
    /// The ground plane: immovable, zero inverse mass.
    Static,
    Body {
        index: usize,
        inv_mass: T,
        inv_inertia_world: Matrix3<T>,
        lever: Vector3<T>,
        orientation: UnitQuaternion<T>,
    },
    Particle {
        rod: usize,
        particle: usize,
        inv_mass: T,
    },
}

impl<T: Real> Side<T> {
    fn resolve(world: &World<T>, e: &EntityRef, lever: Vector3<T>) -> Self {
        match *e {
            EntityRef::Plane => Side::Static,
            EntityRef::Body { body, .. } => {
                let b = &world.bodies[body];
                Side::Body {
                    index: body,
                    inv_mass: b.inv_mass,
                    inv_inertia_world: b.inv_inertia_world(),
                    lever,
                    orientation: b.orientation,
                }
            }
            EntityRef::RodParticle { rod, particle } => Side::Particle {
                rod,
                particle,
                inv_mass: world.rods[rod].particles[particle].inv_mass,
            },
        }
    }

    /// Generalized inverse mass seen along `dir`.
    fn w(&self, dir: &Vector3<T>) -> T {
        match self {
            Side::Static => T::zero(),
            Side::Body { inv_mass, inv_inertia_world, lever, .. } => {
                let rxn = lever.cross(dir);
                *inv_mass + rxn.dot(&(inv_inertia_world * rxn))
            }
            Side::Particle { inv_mass, .. } => *inv_mass,
        }
    }

    /// Where this side's contact point was at the start of the substep.
    fn prev_contact_point(&self, world: &World<T>, point: &Vector3<T>) -> Vector3<T> {
        match self {
            Side::Static => *point,
            Side::Body { index, .. } => {
                let b = &world.bodies[*index];
                let local = quat_rotate(&b.orientation.inverse(), &(point - b.position));
                quat_rotate(&b.prev_orientation, &local) + b.prev_position
            }
            Side::Particle { rod, particle, .. } => {
                let p = &world.rods[*rod].particles[*particle];
                p.prev_position + (point - p.position)
            }
        }
    }

    /// Accumulates the state change from impulse `p` with sign `sign`:
    /// `Δx = sign * m^-1 p`, `Δθ = sign * I^-1 (r x p)`.
    fn accumulate(&self, sign: T, p: &Vector3<T>, extra: &Vector3<T>, acc: &mut DeltaAccumulator<T>) {
        let total = (p + extra) * sign;
        match self {
            Side::Static => {}
            Side::Body { index, inv_mass, inv_inertia_world, lever, orientation } => {
                acc.add_body_dx(*index, total * *inv_mass);
                let dtheta = inv_inertia_world * lever.cross(&total);
                let dq = pure_quaternion(&dtheta) * orientation.quaternion() * real::<T>(0.5);
                acc.add_body_dq(*index, dq);
            }
            Side::Particle { rod, particle, inv_mass } => {
                acc.add_rod_dx(*rod, *particle, total * *inv_mass);
            }
        }
    }
}

/// Shared normal + friction projection for every contact kind. Inactive
/// contacts (`gap >= 0`) contribute nothing.
fn solve_contact<T: Real>(
    pair: &ContactPair<T>,
    world: &World<T>,
    friction_mu: Option<T>,
    acc: &mut DeltaAccumulator<T>,
) {
    let c = pair.gap();
    if c >= T::zero() {
        return;
    }
    let n = pair.normal;
    let side_a = Side::resolve(world, &pair.a, pair.lever_a);
    let side_b = Side::resolve(world, &pair.b, pair.lever_b);
    let w_sum = side_a.w(&n) + side_b.w(&n);
    if w_sum <= T::zero() {
        log::warn!("skipping contact between kinematic entities (singular system)");
        return;
    }
    let lambda_n = -c / w_sum; // > 0 for penetration
    let p = n * lambda_n;

    // Position-level Coulomb friction: cancel tangential slip accumulated
    // this substep, clamped to mu * lambda_n.
    let mut friction_impulse = Vector3::zeros();
    if let Some(mu) = friction_mu {
        let slip_b = pair.point_b - side_b.prev_contact_point(world, &pair.point_b);
        let slip_a = pair.point_a - side_a.prev_contact_point(world, &pair.point_a);
        let rel = slip_b - slip_a;
        let tangential = rel - n * n.dot(&rel);
        let slip = tangential.norm();
        if slip > real::<T>(1e-12) {
            let t = tangential / slip;
            let wt = side_a.w(&t) + side_b.w(&t);
            if wt > T::zero() {
                let lambda_t = (slip / wt).min(mu * lambda_n);
                friction_impulse = t * -lambda_t;
            }
        }
    }

    side_a.accumulate(-T::one(), &p, &friction_impulse, acc);
    side_b.accumulate(T::one(), &p, &friction_impulse, acc);
}

/// Contact between two rigid bodies (or a body and the ground plane).
pub fn solve_rigid_contact<T: Real>(
    pair: &ContactPair<T>,
    world: &World<T>,
    friction_mu: Option<T>,
    acc: &mut DeltaAccumulator<T>,
) {
    debug_assert!(matches!(pair.kind, ContactKind::RigidRigid | ContactKind::EntityPlane));
    solve_contact(pair, world, friction_mu, acc);
}

/// Contact between a rigid body and a particle (or particle-particle /
/// particle-plane). The particle's generalized inverse mass is `1/m`; it
/// receives no orientation update.
pub fn solve_rigid_particle_contact<T: Real>(
    pair: &ContactPair<T>,
    world: &World<T>,
    friction_mu: Option<T>,
    acc: &mut DeltaAccumulator<T>,
) {
    debug_assert!(matches!(
        pair.kind,
        ContactKind::RigidParticle | ContactKind::ParticleParticle | ContactKind::EntityPlane
    ));
    solve_contact(pair, world, friction_mu, acc);
}

/// Discrete Darboux vector `(2/l) Im(q̄_i q_j)` of two adjacent frames.
pub fn compute_darboux<T: Real>(
    q_i: &UnitQuaternion<T>,
    q_j: &UnitQuaternion<T>,
    l_avg: T,
) -> Vector3<T> {
    let u = q_i.quaternion().conjugate() * q_j.quaternion();
    imag(&u) * (real::<T>(2.0) / l_avg)
}

/// Shear-stretch constraint of rod segment `seg`:
/// `C = (x_j - x_i)/l - d3(q)`, projected with weights
/// `(1/m_i, 1/m_j, 1/m_q)`.
pub fn solve_shear_stretch<T: Real>(
    rod_index: usize,
    seg: usize,
    rod: &Rod<T>,
    acc: &mut DeltaAccumulator<T>,
) {
    let (i, j) = (seg, seg + 1);
    let l = rod.rest_lengths[seg];
    let q = rod.segments[seg].orientation;
    let e3 = Vector3::new(T::zero(), T::zero(), T::one());
    let d3 = quat_rotate(&q, &e3);
    let c = (rod.particles[j].position - rod.particles[i].position) / l - d3;

    let w_i = rod.particles[i].inv_mass;
    let w_j = rod.particles[j].inv_mass;
    let w_q = rod.segments[seg].inv_mq;
    let denom = w_i + w_j + real::<T>(4.0) * w_q * l * l;
    if denom <= T::zero() {
        log::warn!("skipping fully kinematic shear-stretch constraint");
        return;
    }

    acc.add_rod_dx(rod_index, i, c * (w_i * l / denom));
    acc.add_rod_dx(rod_index, j, c * (-w_j * l / denom));

    // Δq = (2 w_q l^2 / denom) Ĉ ⊗ q ⊗ ē3, with ē3 the conjugate of the
    // pure quaternion e3.
    let e3_bar = Quaternion::from_parts(T::zero(), -e3);
    let dq = pure_quaternion(&c) * q.quaternion() * e3_bar
        * (real::<T>(2.0) * w_q * l * l / denom);
    acc.add_rod_dq(rod_index, seg, dq);
}

/// Bend-twist constraint of adjacent segments `(pair, pair + 1)`:
/// `C = Im(q̄_i q_j) - α Im(q̄_i⁰ q_j⁰)` with `α ∈ {+1, -1}` resolving the
/// quaternion double cover.
pub fn solve_bend_twist<T: Real>(
    rod_index: usize,
    pair: usize,
    rod: &Rod<T>,
    acc: &mut DeltaAccumulator<T>,
) {
    let (i, j) = (pair, pair + 1);
    let q_i = rod.segments[i].orientation;
    let q_j = rod.segments[j].orientation;
    let l_avg = (rod.rest_lengths[i] + rod.rest_lengths[j]) * real::<T>(0.5);

    let omega = compute_darboux(&q_i, &q_j, l_avg);
    let omega0 = rod.rest_darboux[pair];
    let alpha = bend_twist_sign(&omega, &omega0);
    // C in quaternion-imaginary units: (l/2) (Ω - α Ω⁰)
    let c = (omega - omega0 * alpha) * (l_avg * real::<T>(0.5));

    let w_i = rod.segments[i].inv_mq;
    let w_j = rod.segments[j].inv_mq;
    let denom = w_i + w_j;
    if denom <= T::zero() {
        log::warn!("skipping fully kinematic bend-twist constraint");
        return;
    }

    let c_quat = pure_quaternion(&c);
    let dq_i = q_j.quaternion() * c_quat * (w_i / denom);
    let dq_j = q_i.quaternion() * c_quat * (-w_j / denom);
    acc.add_rod_dq(rod_index, i, dq_i);
    acc.add_rod_dq(rod_index, j, dq_j);
}

/// Double-cover sign: the `α ∈ {+1, -1}` minimizing `‖Ω - α Ω⁰‖`.
pub fn bend_twist_sign<T: Real>(omega: &Vector3<T>, omega0: &Vector3<T>) -> T {
    if (omega - omega0).norm_squared() <= (omega + omega0).norm_squared() {
        T::one()
    } else {
        -T::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::GroundPlane;
    use crate::math::Pose;
    use crate::pbd::state::{CollisionSphere, Particle, Segment};
    use approx::assert_relative_eq;

    fn sphere_body(name: &str, pos: Vector3<f64>, r: f64, mass: f64) -> RigidBody<f64> {
        // solid sphere inertia (2/5) m r^2
        let i = 0.4 * mass * r * r;
        RigidBody::new_dynamic(
            name,
            mass,
            Matrix3::identity() * i,
            Pose::new(pos, UnitQuaternion::identity()),
            vec![CollisionSphere { offset: Vector3::zeros(), radius: r }],
        )
    }

    #[test]
    fn generalized_inverse_mass_parallel_lever() {
        let body = sphere_body("s", Vector3::zeros(), 0.1, 2.0);
        let n = Vector3::new(0.0, 0.0, 1.0);
        let r = n * 0.1;
        assert_relative_eq!(generalized_inverse_mass(&body, &r, &n), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn generalized_inverse_mass_kinematic_is_zero() {
        let body = RigidBody::new_kinematic(
            "k",
            Pose::identity(),
            vec![CollisionSphere { offset: Vector3::zeros(), radius: 0.1 }],
        );
        let n = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(generalized_inverse_mass(&body, &Vector3::new(0.1, 0.0, 0.0), &n), 0.0);
    }

    #[test]
    fn generalized_inverse_mass_perpendicular_unit_sphere() {
        // unit sphere body: I = (2/5) m R^2, r ⊥ n with ‖r‖ = R gives
        // m^-1 (1 + 5/2)
        let m = 3.0;
        let r_s = 0.2;
        let body = sphere_body("s", Vector3::zeros(), r_s, m);
        let n = Vector3::new(0.0, 0.0, 1.0);
        let r = Vector3::new(r_s, 0.0, 0.0);
        assert_relative_eq!(
            generalized_inverse_mass(&body, &r, &n),
            (1.0 + 2.5) / m,
            epsilon = 1e-12
        );
    }

    fn overlap_world(d: f64) -> (World<f64>, ContactPair<f64>) {
        // two identical 5 cm spheres overlapping by d along x
        let r = 0.05;
        let mut world = World::new();
        world.bodies.push(sphere_body("a", Vector3::zeros(), r, 1.0));
        world.bodies.push(sphere_body("b", Vector3::new(2.0 * r - d, 0.0, 0.0), r, 1.0));
        let pairs = crate::collision::collect_collision_pairs(&world, 0.0);
        assert_eq!(pairs.len(), 1);
        (world, pairs[0].clone())
    }

    #[test]
    fn separated_contact_contributes_nothing() {
        let r = 0.05;
        let mut world = World::new();
        world.bodies.push(sphere_body("a", Vector3::zeros(), r, 1.0));
        world.bodies.push(sphere_body("b", Vector3::new(2.0 * r + 0.0002, 0.0, 0.0), r, 1.0));
        let pairs = crate::collision::collect_collision_pairs(&world, 5e-4);
        assert_eq!(pairs.len(), 1);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_contact(&pairs[0], &world, None, &mut acc);
        assert_eq!(acc.body_dx_sum(0).0, Vector3::zeros());
        assert_eq!(acc.body_dx_sum(1).0, Vector3::zeros());
    }

    #[test]
    fn symmetric_spheres_split_penetration() {
        let d = 0.004;
        let (world, pair) = overlap_world(d);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_contact(&pair, &world, None, &mut acc);
        let (dx_a, _) = acc.body_dx_sum(0);
        let (dx_b, _) = acc.body_dx_sum(1);
        // each translated d/2 apart, no rotation (r x n = 0)
        assert_relative_eq!(dx_a, Vector3::new(-d / 2.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(dx_b, Vector3::new(d / 2.0, 0.0, 0.0), epsilon = 1e-12);
        let (dq_a, _) = acc.body_dq_sum(0);
        assert!(dq_a.norm() < 1e-14);
        // momentum conservation
        assert!((dx_a * world.bodies[0].mass + dx_b * world.bodies[1].mass).norm() < 1e-10);
    }

    #[test]
    fn kinematic_vs_dynamic_moves_only_dynamic() {
        let r = 0.05;
        let d = 0.003;
        let mut world = World::new();
        world.bodies.push(RigidBody::new_kinematic(
            "k",
            Pose::identity(),
            vec![CollisionSphere { offset: Vector3::zeros(), radius: r }],
        ));
        world.bodies.push(sphere_body("b", Vector3::new(2.0 * r - d, 0.0, 0.0), r, 1.0));
        let pairs = crate::collision::collect_collision_pairs(&world, 0.0);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_contact(&pairs[0], &world, None, &mut acc);
        assert_eq!(acc.body_dx_sum(0).0, Vector3::zeros());
        // dynamic body pushed out by the full penetration along n
        assert_relative_eq!(acc.body_dx_sum(1).0, Vector3::new(d, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn particle_pushed_out_by_kinematic_body() {
        let mut world = World::new();
        world.bodies.push(RigidBody::new_kinematic(
            "pusher",
            Pose::identity(),
            vec![CollisionSphere { offset: Vector3::zeros(), radius: 0.05 }],
        ));
        let d = 0.002;
        world.rods.push(Rod {
            name: "rope".into(),
            particles: vec![Particle::new(0.01, Vector3::new(0.055 - d, 0.0, 0.0), 0.005)],
            segments: vec![],
            rest_lengths: vec![],
            rest_darboux: vec![],
            radius: 0.005,
        });
        let pairs = crate::collision::collect_collision_pairs(&world, 0.0);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].kind, ContactKind::RigidParticle);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_particle_contact(&pairs[0], &world, None, &mut acc);
        assert_relative_eq!(
            acc.rod_dx_sum(0, 0).0,
            Vector3::new(d, 0.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn plane_contact_resolves_upward() {
        let mut world = World::new();
        world.ground = Some(GroundPlane::horizontal(0.0));
        world.bodies.push(sphere_body("a", Vector3::new(0.0, 0.0, 0.004), 0.005, 1.0));
        let pairs = crate::collision::collect_collision_pairs(&world, 5e-4);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_contact(&pairs[0], &world, None, &mut acc);
        assert_relative_eq!(
            acc.body_dx_sum(0).0,
            Vector3::new(0.0, 0.0, 0.001),
            epsilon = 1e-12
        );
    }

    #[test]
    fn darboux_identical_frames_zero() {
        let q = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.3);
        assert_eq!(compute_darboux(&q, &q, 0.5), Vector3::zeros());
    }

    #[test]
    fn darboux_quarter_turn() {
        // q_i identity, q_j 90° about z, l = 1:
        // q̄_i q_j = (w=cos45°, z=sin45°), Im = (0,0,√2/2), Ω = (0,0,√2)
        let q_i = UnitQuaternion::identity();
        let q_j = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let omega = compute_darboux(&q_i, &q_j, 1.0);
        assert_relative_eq!(omega, Vector3::new(0.0, 0.0, std::f64::consts::SQRT_2), epsilon = 1e-12);
        // doubling l halves the result
        let half = compute_darboux(&q_i, &q_j, 2.0);
        assert_relative_eq!(half, omega / 2.0, epsilon = 1e-12);
    }

    fn straight_rod(n_seg: usize, l: f64) -> Rod<f64> {
        let particles = (0..=n_seg)
            .map(|k| Particle::new(0.01, Vector3::new(k as f64 * l, 0.0, 0.0), 0.004))
            .collect();
        // d3 must point along +x: rotate e3 onto e1
        let q = UnitQuaternion::rotation_between(
            &Vector3::new(0.0, 0.0, 1.0),
            &Vector3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        let segments = (0..n_seg)
            .map(|_| Segment {
                orientation: q,
                angular_velocity: Vector3::zeros(),
                inv_mq: 10.0,
                prev_orientation: q,
            })
            .collect();
        let rest_darboux = (0..n_seg.saturating_sub(1))
            .map(|_| compute_darboux(&q, &q, l))
            .collect();
        Rod {
            name: "rod".into(),
            particles,
            segments,
            rest_lengths: vec![l; n_seg],
            rest_darboux,
            radius: 0.004,
        }
    }

    #[test]
    fn shear_stretch_zero_at_rest() {
        let rod = straight_rod(2, 0.1);
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_shear_stretch(0, 0, &world.rods[0], &mut acc);
        assert!(acc.rod_dx_sum(0, 0).0.norm() < 1e-12);
        assert!(acc.rod_dx_sum(0, 1).0.norm() < 1e-12);
        assert!(acc.rod_dq_sum(0, 0).0.norm() < 1e-12);
    }

    #[test]
    fn shear_stretch_pulls_stretched_segment_together() {
        let mut rod = straight_rod(1, 0.1);
        rod.particles[1].position = Vector3::new(0.15, 0.0, 0.0); // stretched 1.5x
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_shear_stretch(0, 0, &world.rods[0], &mut acc);
        let dx0 = acc.rod_dx_sum(0, 0).0;
        let dx1 = acc.rod_dx_sum(0, 1).0;
        // endpoints move toward each other along the segment axis
        assert!(dx0.x > 0.0, "x_i pulled forward, got {dx0:?}");
        assert!(dx1.x < 0.0, "x_j pulled back, got {dx1:?}");
        assert_relative_eq!(dx0.y, 0.0, epsilon = 1e-14);
        assert_relative_eq!(dx1.z, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn shear_stretch_kinematic_endpoint() {
        let mut rod = straight_rod(1, 0.1);
        rod.particles[0].inv_mass = 0.0;
        rod.particles[1].position = Vector3::new(0.13, 0.0, 0.0);
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_shear_stretch(0, 0, &world.rods[0], &mut acc);
        assert_eq!(acc.rod_dx_sum(0, 0).0, Vector3::zeros());
        assert!(acc.rod_dx_sum(0, 1).0.norm() > 0.0);
        assert!(acc.rod_dq_sum(0, 0).0.norm() > 0.0);
    }

    #[test]
    fn bend_twist_zero_at_rest() {
        let rod = straight_rod(3, 0.1);
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_bend_twist(0, 0, &world.rods[0], &mut acc);
        solve_bend_twist(0, 1, &world.rods[0], &mut acc);
        assert!(acc.rod_dq_sum(0, 0).0.norm() < 1e-12);
        assert!(acc.rod_dq_sum(0, 1).0.norm() < 1e-12);
        assert!(acc.rod_dq_sum(0, 2).0.norm() < 1e-12);
    }

    #[test]
    fn bend_twist_symmetric_split_reduces_violation() {
        let mut rod = straight_rod(2, 0.1);
        // bend segment 1 by 10 degrees about y relative to segment 0
        let tilt = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 10f64.to_radians());
        rod.segments[1].orientation = tilt * rod.segments[1].orientation;
        let world = World { bodies: vec![], rods: vec![rod], ground: None };

        let c_before = {
            let r = &world.rods[0];
            let l = 0.1;
            let omega = compute_darboux(&r.segments[0].orientation, &r.segments[1].orientation, l);
            (omega - r.rest_darboux[0]).norm()
        };

        let mut acc = DeltaAccumulator::for_world(&world);
        solve_bend_twist(0, 0, &world.rods[0], &mut acc);
        let mut after = world.clone();
        acc.apply(&mut after);

        let r = &after.rods[0];
        let omega = compute_darboux(&r.segments[0].orientation, &r.segments[1].orientation, 0.1);
        let alpha = bend_twist_sign(&omega, &r.rest_darboux[0]);
        let c_after = (omega - r.rest_darboux[0] * alpha).norm();
        assert!(c_after < c_before, "violation grew: {c_before} -> {c_after}");

        // equal inverse rotational masses: symmetric split
        let (dq0, _) = acc.rod_dq_sum(0, 0);
        let (dq1, _) = acc.rod_dq_sum(0, 1);
        assert_relative_eq!(dq0.norm(), dq1.norm(), epsilon = 1e-12);
    }

    #[test]
    fn bend_twist_double_cover_flip() {
        let mut rod = straight_rod(2, 0.1);
        // negate segment 1's quaternion: same rotation, flipped sign
        let q1 = rod.segments[1].orientation;
        rod.segments[1].orientation = UnitQuaternion::new_unchecked(-q1.quaternion());
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_bend_twist(0, 0, &world.rods[0], &mut acc);
        // with alpha resolving the double cover the constraint stays ~0
        assert!(acc.rod_dq_sum(0, 0).0.norm() < 1e-12);
        assert!(acc.rod_dq_sum(0, 1).0.norm() < 1e-12);
    }
}
