//! The substep loop: collect pairs, predict, iterate the Jacobi solver,
//! update velocities.

use nalgebra::Vector3;

use crate::collision::{collect_collision_pairs, ContactKind, ContactPair, EntityRef};
use crate::math::{apply_angular_delta, imag, pure_quaternion, real, Pose, Real};

use super::accumulator::DeltaAccumulator;
use super::constraint::{solve_bend_twist, solve_rigid_contact, solve_rigid_particle_contact, solve_shear_stretch};
use super::state::{ExternalForces, SimConfig, World};

/// Semi-implicit Euler prediction over one substep `h`.
///
/// Dynamic entities integrate gravity and external wrenches; kinematic
/// entities are moved to their scripted targets. Pre-step positions and
/// orientations are cached for the velocity update.
pub fn predict_states<T: Real>(
    world: &mut World<T>,
    h: T,
    gravity: &Vector3<T>,
    forces: &ExternalForces<T>,
) {
    let half = real::<T>(0.5);
    for (bi, body) in world.bodies.iter_mut().enumerate() {
        body.prev_position = body.position;
        body.prev_orientation = body.orientation;
        if body.is_kinematic() {
            if let Some(target) = body.kinematic_target {
                body.position = target.position;
                body.orientation = target.orientation;
            }
            continue;
        }
        let (f, tau) = forces
            .body_wrenches
            .get(bi)
            .copied()
            .unwrap_or((Vector3::zeros(), Vector3::zeros()));
        body.velocity += (gravity + f * body.inv_mass) * h;
        body.position += body.velocity * h;
        body.angular_velocity += body.inv_inertia_world() * tau * h;
        let dq = pure_quaternion(&body.angular_velocity) * body.orientation.quaternion() * (h * half);
        body.orientation = apply_angular_delta(&body.orientation, &dq);
    }
    for (ri, rod) in world.rods.iter_mut().enumerate() {
        for (pi, p) in rod.particles.iter_mut().enumerate() {
            p.prev_position = p.position;
            if p.is_kinematic() {
                continue;
            }
            let f = forces
                .rod_forces
                .get(ri)
                .and_then(|v| v.get(pi))
                .copied()
                .unwrap_or_else(Vector3::zeros);
            p.velocity += (gravity + f * p.inv_mass) * h;
            p.position += p.velocity * h;
        }
        for s in rod.segments.iter_mut() {
            s.prev_orientation = s.orientation;
            // gravity exerts no torque on segments
            let dq = pure_quaternion(&s.angular_velocity) * s.orientation.quaternion() * (h * half);
            s.orientation = apply_angular_delta(&s.orientation, &dq);
        }
    }
}

/// Recovers velocities from the positional change over the substep and
/// applies the per-substep damping factor.
pub fn update_velocities<T: Real>(world: &mut World<T>, h: T, damping: T) {
    let two = real::<T>(2.0);
    for body in world.bodies.iter_mut() {
        body.velocity = (body.position - body.prev_position) / h * damping;
        let mut dq = body.orientation.quaternion() * body.prev_orientation.quaternion().conjugate();
        // pick the short-path sign so ‖ω‖ h <= π
        if dq.w < T::zero() {
            dq = -dq;
        }
        body.angular_velocity = imag(&dq) * (two / h) * damping;
    }
    for rod in world.rods.iter_mut() {
        for p in rod.particles.iter_mut() {
            p.velocity = (p.position - p.prev_position) / h * damping;
        }
        for s in rod.segments.iter_mut() {
            let mut dq = s.orientation.quaternion() * s.prev_orientation.quaternion().conjugate();
            if dq.w < T::zero() {
                dq = -dq;
            }
            s.angular_velocity = imag(&dq) * (two / h) * damping;
        }
    }
}

/// Recomputes a pair's contact geometry from the current world state. Pair
/// identity (entities, kind) is preserved; only normal/points/levers move.
fn refresh_pair<T: Real>(world: &World<T>, pair: &mut ContactPair<T>) {
    let center_radius = |e: &EntityRef| -> (Vector3<T>, T, Vector3<T>) {
        match *e {
            EntityRef::Plane => (Vector3::zeros(), T::zero(), Vector3::zeros()),
            EntityRef::Body { body, sphere } => {
                let (c, r) = world.bodies[body].world_sphere(sphere);
                (c, r, world.bodies[body].position)
            }
            EntityRef::RodParticle { rod, particle } => {
                let p = &world.rods[rod].particles[particle];
                (p.position, p.radius, p.position)
            }
        }
    };
    if pair.kind == ContactKind::EntityPlane {
        let plane = world.ground.as_ref().expect("plane contact without ground");
        let (c, r, com) = center_radius(&pair.b);
        let d = plane.signed_distance(&c);
        pair.normal = plane.normal;
        pair.point_a = c - plane.normal * d;
        pair.point_b = c - plane.normal * r;
        pair.lever_a = Vector3::zeros();
        pair.lever_b = pair.point_b - com;
        return;
    }
    let (ca, ra, com_a) = center_radius(&pair.a);
    let (cb, rb, com_b) = center_radius(&pair.b);
    let delta = cb - ca;
    let dist = delta.norm();
    pair.normal = if dist < real::<T>(1e-12) {
        Vector3::new(T::zero(), T::zero(), T::one())
    } else {
        delta / dist
    };
    pair.point_a = ca + pair.normal * ra;
    pair.point_b = cb - pair.normal * rb;
    pair.lever_a = pair.point_a - com_a;
    pair.lever_b = pair.point_b - com_b;
}

/// Advances the world by one frame (`config.dt`).
///
/// Each substep collects collision pairs, predicts states, then runs the
/// Jacobi solver iterations in the fixed order rigid-particle contacts,
/// shear-stretch, bend-twist, rigid contacts, applying averaged deltas after
/// each pass. External forces act during prediction. Kinematic bodies are
/// interpolated from their frame-start pose to their scripted target.
pub fn step<T: Real>(world: &mut World<T>, config: &SimConfig<T>, forces: &ExternalForces<T>) {
    if world.is_empty() {
        return;
    }
    let substeps = config.num_substeps.max(1);
    let h = config.dt / T::from_usize(substeps).unwrap();
    let mu = config.friction.then_some(config.friction_mu);

    // interpolate kinematic bodies from their frame-start pose to the target
    let start_poses: Vec<Option<(Pose<T>, Pose<T>)>> = world
        .bodies
        .iter()
        .map(|b| {
            if b.is_kinematic() {
                b.kinematic_target.map(|t| (b.pose(), t))
            } else {
                None
            }
        })
        .collect();

    let mut acc = DeltaAccumulator::for_world(world);
    for s in 0..substeps {
        let frac = T::from_usize(s + 1).unwrap() / T::from_usize(substeps).unwrap();
        for (bi, interp) in start_poses.iter().enumerate() {
            if let Some((from, to)) = interp {
                let position = from.position + (to.position - from.position) * frac;
                let orientation = from.orientation.slerp(&to.orientation, frac);
                world.bodies[bi].kinematic_target = Some(Pose::new(position, orientation));
            }
        }

        let mut pairs = collect_collision_pairs(world, config.contact_margin);
        predict_states(world, h, &config.gravity, forces);

        for _ in 0..config.solver_iterations {
            acc.clear();
            for pair in pairs.iter_mut() {
                refresh_pair(world, pair);
            }
            // Algorithm order: rigid-particle contacts, shear-stretch,
            // bend-twist, rigid-rigid contacts.
            for pair in pairs.iter().filter(|p| {
                matches!(p.kind, ContactKind::RigidParticle | ContactKind::ParticleParticle)
                    || (p.kind == ContactKind::EntityPlane
                        && matches!(p.b, EntityRef::RodParticle { .. }))
            }) {
                solve_rigid_particle_contact(pair, world, mu, &mut acc);
            }
            for (ri, rod) in world.rods.iter().enumerate() {
                for seg in 0..rod.segments.len() {
                    solve_shear_stretch(ri, seg, rod, &mut acc);
                }
            }
            for (ri, rod) in world.rods.iter().enumerate() {
                for pair_idx in 0..rod.rest_darboux.len() {
                    solve_bend_twist(ri, pair_idx, rod, &mut acc);
                }
            }
            for pair in pairs.iter().filter(|p| {
                p.kind == ContactKind::RigidRigid
                    || (p.kind == ContactKind::EntityPlane
                        && matches!(p.b, EntityRef::Body { .. }))
            }) {
                solve_rigid_contact(pair, world, mu, &mut acc);
            }
            acc.apply(world);
        }

        update_velocities(world, h, config.velocity_damping);
    }

    // restore frame-end targets so repeated stepping with an unchanged
    // target is stable
    for (bi, interp) in start_poses.iter().enumerate() {
        if let Some((_, to)) = interp {
            world.bodies[bi].kinematic_target = Some(*to);
        }
    }
}

/// Convenience: transforms a world-frame wrench application into the
/// per-entity force layout. Forces are applied at the COM; `torque` is the
/// moment about the COM.
pub fn set_body_wrench<T: Real>(
    forces: &mut ExternalForces<T>,
    body: usize,
    force: Vector3<T>,
    torque: Vector3<T>,
) {
    forces.body_wrenches[body] = (force, torque);
}
