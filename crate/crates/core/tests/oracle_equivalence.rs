//! Verifies every specialized constraint solver against the generic
//! Lagrangian projection over randomized configurations, and checks pairwise
//! momentum conservation and the convergence direction of single solves.

use nalgebra::{DMatrix, DVector, Quaternion, UnitQuaternion, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use desktwin::collision::{ContactKind, EntityRef};
use desktwin::pbd::{
    compute_darboux, bend_twist_sign, generic_project, solve_bend_twist, solve_rigid_contact,
    solve_rigid_particle_contact, solve_shear_stretch, DeltaAccumulator, Participant, Particle,
    Rod, Segment, World,
};
use desktwin::testkit::{
    d3_jacobian, imag_projection, quat_conj_matrix, quat_coords, quat_left_matrix,
    quat_right_matrix, rand_body, rand_contact, rand_quat, straight_rod,
};

const REL_TOL: f64 = 1e-8;
const MOMENTUM_TOL: f64 = 1e-10;

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff: f64 = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
    if scale < 1e-14 {
        diff
    } else {
        diff / scale
    }
}

/// Quaternion delta `1/2 [dθ, 0] ⊗ q` from an angular-space oracle delta.
fn quat_delta_from_angular(dtheta: &Vector3<f64>, q: &UnitQuaternion<f64>) -> Quaternion<f64> {
    Quaternion::from_parts(0.0, *dtheta) * q.quaternion() * 0.5
}

fn flat3(v: &Vector3<f64>) -> Vec<f64> {
    vec![v.x, v.y, v.z]
}

fn flat_q(q: &Quaternion<f64>) -> Vec<f64> {
    vec![q.i, q.j, q.k, q.w]
}

/// Rigid-rigid contact vs generic projection (1000 random configurations).
#[test]
fn rigid_contact_matches_generic_projection() {
    let mut rng = StdRng::seed_from_u64(401);
    let mut checked = 0usize;
    while checked < 1000 {
        let kin_a = rng.gen_bool(0.15);
        let kin_b = !kin_a && rng.gen_bool(0.15);
        let mut world = World::new();
        world.bodies.push(rand_body(&mut rng, "a", kin_a));
        world.bodies.push(rand_body(&mut rng, "b", kin_b));
        let pair = rand_contact(
            &mut rng,
            &world,
            EntityRef::Body { body: 0, sphere: 0 },
            EntityRef::Body { body: 1, sphere: 0 },
            ContactKind::RigidRigid,
        );

        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_contact(&pair, &world, None, &mut acc);

        // oracle: C = n · (b_b - b_a) with participants (x_a, θ_a, x_b, θ_b)
        let n = pair.normal;
        let grad = |sign: f64, v: Vector3<f64>| {
            DMatrix::from_row_slice(1, 3, &[sign * v.x, sign * v.y, sign * v.z])
        };
        let c = DVector::from_vec(vec![pair.gap()]);
        let body_a = &world.bodies[0];
        let body_b = &world.bodies[1];
        let participants = vec![
            Participant::isotropic(grad(-1.0, n), body_a.inv_mass),
            Participant {
                gradient: grad(-1.0, pair.lever_a.cross(&n)),
                inv_mass: DMatrix::from_fn(3, 3, |r, cidx| body_a.inv_inertia_world()[(r, cidx)]),
            },
            Participant::isotropic(grad(1.0, n), body_b.inv_mass),
            Participant {
                gradient: grad(1.0, pair.lever_b.cross(&n)),
                inv_mass: DMatrix::from_fn(3, 3, |r, cidx| body_b.inv_inertia_world()[(r, cidx)]),
            },
        ];
        let oracle = generic_project(&c, &participants).expect("solvable");

        let (dx_a, _) = acc.body_dx_sum(0);
        let (dq_a, _) = acc.body_dq_sum(0);
        let (dx_b, _) = acc.body_dx_sum(1);
        let (dq_b, _) = acc.body_dq_sum(1);

        let want_dx_a = Vector3::new(oracle[0][0], oracle[0][1], oracle[0][2]);
        let want_dth_a = Vector3::new(oracle[1][0], oracle[1][1], oracle[1][2]);
        let want_dx_b = Vector3::new(oracle[2][0], oracle[2][1], oracle[2][2]);
        let want_dth_b = Vector3::new(oracle[3][0], oracle[3][1], oracle[3][2]);
        let want_dq_a = quat_delta_from_angular(&want_dth_a, &body_a.orientation);
        let want_dq_b = quat_delta_from_angular(&want_dth_b, &body_b.orientation);

        let got: Vec<f64> = [flat3(&dx_a), flat_q(&dq_a), flat3(&dx_b), flat_q(&dq_b)].concat();
        let want: Vec<f64> =
            [flat3(&want_dx_a), flat_q(&want_dq_a), flat3(&want_dx_b), flat_q(&want_dq_b)]
                .concat();
        let err = rel_err(&got, &want);
        assert!(err <= REL_TOL, "config {checked}: relative error {err:.3e}");

        // momentum conservation for finite-mass pairs
        if !kin_a && !kin_b {
            let p = dx_a * body_a.mass + dx_b * body_b.mass;
            assert!(p.norm() <= MOMENTUM_TOL, "momentum residual {:.3e}", p.norm());
        }
        checked += 1;
    }
}

/// Rigid-particle contact vs generic projection.
#[test]
fn rigid_particle_contact_matches_generic_projection() {
    let mut rng = StdRng::seed_from_u64(402);
    for trial in 0..1000 {
        let kin_body = rng.gen_bool(0.2);
        let kin_particle = !kin_body && rng.gen_bool(0.2);
        let mut world = World::new();
        world.bodies.push(rand_body(&mut rng, "a", kin_body));
        let mut particle = Particle::new(
            rng.gen_range(0.001..0.2),
            Vector3::new(
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            ),
            0.005,
        );
        if kin_particle {
            particle.inv_mass = 0.0;
        }
        world.rods.push(Rod {
            name: "p".into(),
            particles: vec![particle],
            segments: vec![],
            rest_lengths: vec![],
            rest_darboux: vec![],
            radius: 0.005,
        });
        let pair = rand_contact(
            &mut rng,
            &world,
            EntityRef::Body { body: 0, sphere: 0 },
            EntityRef::RodParticle { rod: 0, particle: 0 },
            ContactKind::RigidParticle,
        );

        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_particle_contact(&pair, &world, None, &mut acc);

        let n = pair.normal;
        let c = DVector::from_vec(vec![pair.gap()]);
        let body = &world.bodies[0];
        let p_inv_mass = world.rods[0].particles[0].inv_mass;
        let grad = |sign: f64, v: Vector3<f64>| {
            DMatrix::from_row_slice(1, 3, &[sign * v.x, sign * v.y, sign * v.z])
        };
        // the particle contributes only its translational block (1/m)
        let participants = vec![
            Participant::isotropic(grad(-1.0, n), body.inv_mass),
            Participant {
                gradient: grad(-1.0, pair.lever_a.cross(&n)),
                inv_mass: DMatrix::from_fn(3, 3, |r, cidx| body.inv_inertia_world()[(r, cidx)]),
            },
            Participant::isotropic(grad(1.0, n), p_inv_mass),
        ];
        let oracle = generic_project(&c, &participants).expect("solvable");

        let (dx_body, _) = acc.body_dx_sum(0);
        let (dq_body, _) = acc.body_dq_sum(0);
        let (dx_p, _) = acc.rod_dx_sum(0, 0);

        let want_dth = Vector3::new(oracle[1][0], oracle[1][1], oracle[1][2]);
        let want_dq = quat_delta_from_angular(&want_dth, &body.orientation);
        let got: Vec<f64> = [flat3(&dx_body), flat_q(&dq_body), flat3(&dx_p)].concat();
        let want: Vec<f64> = [
            vec![oracle[0][0], oracle[0][1], oracle[0][2]],
            flat_q(&want_dq),
            vec![oracle[2][0], oracle[2][1], oracle[2][2]],
        ]
        .concat();
        let err = rel_err(&got, &want);
        assert!(err <= REL_TOL, "config {trial}: relative error {err:.3e}");

        if !kin_body && !kin_particle {
            let p = dx_body * body.mass + dx_p * world.rods[0].particles[0].mass;
            assert!(p.norm() <= MOMENTUM_TOL, "momentum residual {:.3e}", p.norm());
        }
    }
}

fn rand_shear_rod(rng: &mut StdRng) -> Rod<f64> {
    let l = rng.gen_range(0.02..0.2);
    let mut rod = straight_rod(1, l, rng.gen_range(0.001..0.1), rng.gen_range(0.1..2000.0));
    // perturb into a violated configuration
    rod.particles[0].position = Vector3::new(
        rng.gen_range(-0.1..0.1),
        rng.gen_range(-0.1..0.1),
        rng.gen_range(-0.1..0.1),
    );
    rod.particles[1].position =
        rod.particles[0].position
            + Vector3::new(
                rng.gen_range(-1.5 * l..1.5 * l),
                rng.gen_range(-1.5 * l..1.5 * l),
                rng.gen_range(-1.5 * l..1.5 * l),
            );
    rod.segments[0].orientation = rand_quat(rng);
    if rng.gen_bool(0.15) {
        rod.particles[0].inv_mass = 0.0;
    }
    rod
}

/// Shear-stretch vs generic projection in quaternion space.
#[test]
fn shear_stretch_matches_generic_projection() {
    let mut rng = StdRng::seed_from_u64(403);
    for trial in 0..1000 {
        let rod = rand_shear_rod(&mut rng);
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let rod = &world.rods[0];
        let l = rod.rest_lengths[0];
        let q = rod.segments[0].orientation;

        let mut acc = DeltaAccumulator::for_world(&world);
        solve_shear_stretch(0, 0, rod, &mut acc);

        // oracle constraint: C = (x_j - x_i)/l - d3(q)
        let d3 = q.transform_vector(&Vector3::z());
        let c_vec = (rod.particles[1].position - rod.particles[0].position) / l - d3;
        let c = DVector::from_vec(vec![c_vec.x, c_vec.y, c_vec.z]);
        let eye_over_l = DMatrix::<f64>::identity(3, 3) / l;
        let participants = vec![
            Participant::isotropic(-eye_over_l.clone(), rod.particles[0].inv_mass),
            Participant::isotropic(eye_over_l, rod.particles[1].inv_mass),
            Participant::isotropic(-d3_jacobian(&q), rod.segments[0].inv_mq),
        ];
        let oracle = generic_project(&c, &participants).expect("solvable");

        let (dx_i, _) = acc.rod_dx_sum(0, 0);
        let (dx_j, _) = acc.rod_dx_sum(0, 1);
        let (dq, _) = acc.rod_dq_sum(0, 0);
        let got: Vec<f64> = [flat3(&dx_i), flat3(&dx_j), flat_q(&dq)].concat();
        let want: Vec<f64> = [
            oracle[0].iter().copied().collect::<Vec<_>>(),
            oracle[1].iter().copied().collect(),
            oracle[2].iter().copied().collect(),
        ]
        .concat();
        let err = rel_err(&got, &want);
        assert!(err <= REL_TOL, "config {trial}: relative error {err:.3e}");

        // finite-mass endpoints: translational momentum conserved
        if rod.particles[0].inv_mass > 0.0 && rod.particles[1].inv_mass > 0.0 {
            let p = dx_i * rod.particles[0].mass + dx_j * rod.particles[1].mass;
            assert!(p.norm() <= MOMENTUM_TOL, "momentum residual {:.3e}", p.norm());
        }
    }
}

/// Bend-twist vs generic projection in quaternion space, including the
/// double-cover sign.
#[test]
fn bend_twist_matches_generic_projection() {
    let mut rng = StdRng::seed_from_u64(404);
    for trial in 0..1000 {
        let l0 = rng.gen_range(0.02..0.2);
        let l1 = rng.gen_range(0.02..0.2);
        let q_rest_i = rand_quat(&mut rng);
        let q_rest_j = rand_quat(&mut rng);
        let l_avg = 0.5 * (l0 + l1);
        let rest_darboux = compute_darboux(&q_rest_i, &q_rest_j, l_avg);

        let q_i = rand_quat(&mut rng);
        let q_j = rand_quat(&mut rng);
        let segment = |q: UnitQuaternion<f64>, inv_mq: f64| Segment {
            orientation: q,
            angular_velocity: Vector3::zeros(),
            inv_mq,
            prev_orientation: q,
        };
        let rod = Rod {
            name: "rod".into(),
            particles: vec![
                Particle::new(0.01, Vector3::zeros(), 0.004),
                Particle::new(0.01, Vector3::new(l0, 0.0, 0.0), 0.004),
                Particle::new(0.01, Vector3::new(l0 + l1, 0.0, 0.0), 0.004),
            ],
            segments: vec![
                segment(q_i, rng.gen_range(0.1..2000.0)),
                segment(q_j, rng.gen_range(0.1..2000.0)),
            ],
            rest_lengths: vec![l0, l1],
            rest_darboux: vec![rest_darboux],
            radius: 0.004,
        };
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let rod = &world.rods[0];

        let mut acc = DeltaAccumulator::for_world(&world);
        solve_bend_twist(0, 0, rod, &mut acc);

        // oracle: C = Im(q̄_i q_j) - α Im(q̄_i⁰ q_j⁰), gradients assembled
        // from raw multiplication matrices
        let omega = compute_darboux(&q_i, &q_j, l_avg);
        let alpha = bend_twist_sign(&omega, &rest_darboux);
        let c_vec = (omega - rest_darboux * alpha) * (l_avg * 0.5);
        let c = DVector::from_vec(vec![c_vec.x, c_vec.y, c_vec.z]);

        let p = imag_projection();
        let k = quat_conj_matrix();
        let grad_qi = {
            let m = quat_right_matrix(q_j.quaternion()) * k;
            &p * DMatrix::from_fn(4, 4, |r, cidx| m[(r, cidx)])
        };
        let grad_qj = {
            let m = quat_left_matrix(&q_i.quaternion().conjugate());
            &p * DMatrix::from_fn(4, 4, |r, cidx| m[(r, cidx)])
        };
        let participants = vec![
            Participant::isotropic(grad_qi, rod.segments[0].inv_mq),
            Participant::isotropic(grad_qj, rod.segments[1].inv_mq),
        ];
        let oracle = generic_project(&c, &participants).expect("solvable");

        let (dq_i, _) = acc.rod_dq_sum(0, 0);
        let (dq_j, _) = acc.rod_dq_sum(0, 1);
        let got: Vec<f64> = [flat_q(&dq_i), flat_q(&dq_j)].concat();
        let want: Vec<f64> = [
            oracle[0].iter().copied().collect::<Vec<_>>(),
            oracle[1].iter().copied().collect(),
        ]
        .concat();
        let err = rel_err(&got, &want);
        assert!(err <= REL_TOL, "config {trial}: relative error {err:.3e}");
    }
}

/// A single solve of an isolated active constraint never increases |C|.
#[test]
fn single_solve_never_increases_violation() {
    let mut rng = StdRng::seed_from_u64(405);
    for _ in 0..300 {
        // contact
        let mut world = World::new();
        world.bodies.push(rand_body(&mut rng, "a", false));
        world.bodies.push(rand_body(&mut rng, "b", false));
        let pair = rand_contact(
            &mut rng,
            &world,
            EntityRef::Body { body: 0, sphere: 0 },
            EntityRef::Body { body: 1, sphere: 0 },
            ContactKind::RigidRigid,
        );
        let c_before = pair.gap().abs();
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_rigid_contact(&pair, &world, None, &mut acc);
        let mut after = world.clone();
        acc.apply(&mut after);
        // re-evaluate the gap with the same normal and material points
        let local_a = {
            let b = &world.bodies[0];
            b.orientation.inverse().transform_vector(&(pair.point_a - b.position))
        };
        let local_b = {
            let b = &world.bodies[1];
            b.orientation.inverse().transform_vector(&(pair.point_b - b.position))
        };
        let pa = after.bodies[0].orientation.transform_vector(&local_a) + after.bodies[0].position;
        let pb = after.bodies[1].orientation.transform_vector(&local_b) + after.bodies[1].position;
        let c_after = pair.normal.dot(&(pb - pa));
        assert!(
            c_after.abs() <= c_before + 1e-9,
            "contact violation grew: {c_before:.3e} -> {c_after:.3e}"
        );
    }

    for _ in 0..300 {
        // shear-stretch
        let rod = rand_shear_rod(&mut rng);
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let eval = |w: &World<f64>| {
            let r = &w.rods[0];
            let d3 = r.segments[0].orientation.transform_vector(&Vector3::z());
            ((r.particles[1].position - r.particles[0].position) / r.rest_lengths[0] - d3).norm()
        };
        let c_before = eval(&world);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_shear_stretch(0, 0, &world.rods[0], &mut acc);
        let mut after = world.clone();
        acc.apply(&mut after);
        let c_after = eval(&after);
        assert!(
            c_after <= c_before + 1e-9,
            "shear violation grew: {c_before:.3e} -> {c_after:.3e}"
        );
    }

    for _ in 0..300 {
        // bend-twist between two random frames, straight rest shape
        let l = rng.gen_range(0.05..0.15);
        let mut rod = straight_rod(2, l, 0.01, rng.gen_range(1.0..500.0));
        rod.segments[0].orientation = rand_quat(&mut rng);
        rod.segments[1].orientation = rand_quat(&mut rng);
        let world = World { bodies: vec![], rods: vec![rod], ground: None };
        let eval = |w: &World<f64>| {
            let r = &w.rods[0];
            let omega =
                compute_darboux(&r.segments[0].orientation, &r.segments[1].orientation, l);
            let alpha = bend_twist_sign(&omega, &r.rest_darboux[0]);
            (omega - r.rest_darboux[0] * alpha).norm() * (l * 0.5)
        };
        let c_before = eval(&world);
        let mut acc = DeltaAccumulator::for_world(&world);
        solve_bend_twist(0, 0, &world.rods[0], &mut acc);
        let mut after = world.clone();
        acc.apply(&mut after);
        let c_after = eval(&after);
        assert!(
            c_after <= c_before + 1e-9,
            "bend violation grew: {c_before:.3e} -> {c_after:.3e}"
        );
    }
}
