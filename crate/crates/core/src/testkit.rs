//! Test-only helpers: randomized solver configurations and the generic-
//! projection oracle assembly used to verify the specialized constraint
//! solvers. Compiled only for test builds (`testkit` feature); nothing here
//! is part of the production surface, and the gradient constructions are
//! kept independent of the closed-form update rules in `pbd::constraint`.

use nalgebra::{DMatrix, DVector, Matrix3, Quaternion, UnitQuaternion, Vector3, Vector4};
use rand::rngs::StdRng;
use rand::Rng;

use crate::collision::{ContactKind, ContactPair, EntityRef};
use crate::math::Pose;
use crate::pbd::{CollisionSphere, Particle, RigidBody, Rod, Segment, World};

pub fn rand_unit_vector(rng: &mut StdRng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

pub fn rand_quat(rng: &mut StdRng) -> UnitQuaternion<f64> {
    loop {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if q.norm() > 1e-2 {
            return UnitQuaternion::new_normalize(q);
        }
    }
}

/// Random symmetric positive definite inertia tensor in the body frame.
pub fn rand_inertia(rng: &mut StdRng) -> Matrix3<f64> {
    let r = rand_quat(rng).to_rotation_matrix();
    let d = Matrix3::from_diagonal(&Vector3::new(
        rng.gen_range(1e-5..1e-2),
        rng.gen_range(1e-5..1e-2),
        rng.gen_range(1e-5..1e-2),
    ));
    r.matrix() * d * r.matrix().transpose()
}

/// Random rigid body; `kinematic` forces infinite mass.
pub fn rand_body(rng: &mut StdRng, name: &str, kinematic: bool) -> RigidBody<f64> {
    let pose = Pose::new(
        Vector3::new(
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-0.3..0.3),
        ),
        rand_quat(rng),
    );
    let spheres = vec![CollisionSphere { offset: Vector3::zeros(), radius: 0.02 }];
    if kinematic {
        RigidBody::new_kinematic(name, pose, spheres)
    } else {
        RigidBody::new_dynamic(name, rng.gen_range(0.01..5.0), rand_inertia(rng), pose, spheres)
    }
}

/// Random active (penetrating) contact between entities `a` and `b` of the
/// supplied world, with consistent points and lever arms.
pub fn rand_contact(
    rng: &mut StdRng,
    world: &World<f64>,
    a: EntityRef,
    b: EntityRef,
    kind: ContactKind,
) -> ContactPair<f64> {
    let com = |e: &EntityRef| -> Vector3<f64> {
        match *e {
            EntityRef::Plane => Vector3::zeros(),
            EntityRef::Body { body, .. } => world.bodies[body].position,
            EntityRef::RodParticle { rod, particle } => {
                world.rods[rod].particles[particle].position
            }
        }
    };
    let n = rand_unit_vector(rng);
    let com_a = com(&a);
    let com_b = com(&b);
    let lever_a = Vector3::new(
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
    );
    let point_a = com_a + lever_a;
    let gap = rng.gen_range(-0.01..-1e-4);
    let point_b = point_a + n * gap;
    ContactPair {
        kind,
        a,
        b,
        normal: n,
        point_a,
        point_b,
        lever_a,
        lever_b: point_b - com_b,
    }
}

/// Left-multiplication matrix `L(p)` with coordinates ordered `[x, y, z, w]`:
/// `L(p) q = p ⊗ q`.
pub fn quat_left_matrix(p: &Quaternion<f64>) -> nalgebra::Matrix4<f64> {
    let (x, y, z, w) = (p.i, p.j, p.k, p.w);
    nalgebra::Matrix4::new(
        w, -z, y, x,
        z, w, -x, y,
        -y, x, w, z,
        -x, -y, -z, w,
    )
}

/// Right-multiplication matrix `R(q)`: `R(q) p = p ⊗ q`.
pub fn quat_right_matrix(q: &Quaternion<f64>) -> nalgebra::Matrix4<f64> {
    let (x, y, z, w) = (q.i, q.j, q.k, q.w);
    nalgebra::Matrix4::new(
        w, z, -y, x,
        -z, w, x, y,
        y, -x, w, z,
        -x, -y, -z, w,
    )
}

/// Conjugation matrix on `[x, y, z, w]` coordinates.
pub fn quat_conj_matrix() -> nalgebra::Matrix4<f64> {
    nalgebra::Matrix4::from_diagonal(&Vector4::new(-1.0, -1.0, -1.0, 1.0))
}

/// Projection onto the imaginary part: 3x4 on `[x, y, z, w]`.
pub fn imag_projection() -> DMatrix<f64> {
    let mut p = DMatrix::zeros(3, 4);
    p[(0, 0)] = 1.0;
    p[(1, 1)] = 1.0;
    p[(2, 2)] = 1.0;
    p
}

/// Jacobian of the third director `d3(q) = Im(q ⊗ ê3 ⊗ q̄)` w.r.t. the raw
/// quaternion components `[x, y, z, w]`, treating `q` as a free R^4 state
/// (the convention of the quaternion-space projection). Assembled from the
/// product rule on the sandwich:
/// `∂(q ê3 q̄) = (∂q) ê3 q̄ + q ê3 (∂q̄)`.
pub fn d3_jacobian(q: &UnitQuaternion<f64>) -> DMatrix<f64> {
    let e3 = Quaternion::from_parts(0.0, Vector3::z());
    let term1 = quat_right_matrix(&(q.quaternion().conjugate())) * quat_right_matrix(&e3);
    let term2 = quat_left_matrix(&(q.quaternion() * e3)) * quat_conj_matrix();
    let j4 = term1 + term2;
    let mut out = DMatrix::zeros(3, 4);
    for r in 0..3 {
        for c in 0..4 {
            out[(r, c)] = j4[(r, c)];
        }
    }
    out
}

/// Quaternion coords `[x, y, z, w]` as a dynamic vector.
pub fn quat_coords(q: &Quaternion<f64>) -> DVector<f64> {
    DVector::from_vec(vec![q.i, q.j, q.k, q.w])
}

/// Straight rod along +x at rest, with uniform particle mass and segment
/// inverse rotational mass.
pub fn straight_rod(n_seg: usize, l: f64, particle_mass: f64, inv_mq: f64) -> Rod<f64> {
    let q = UnitQuaternion::rotation_between(&Vector3::z(), &Vector3::x()).unwrap();
    let particles = (0..=n_seg)
        .map(|k| Particle::new(particle_mass, Vector3::new(k as f64 * l, 0.0, 0.0), 0.004))
        .collect();
    let segments = (0..n_seg)
        .map(|_| Segment {
            orientation: q,
            angular_velocity: Vector3::zeros(),
            inv_mq,
            prev_orientation: q,
        })
        .collect();
    let rest_darboux =
        (0..n_seg.saturating_sub(1)).map(|_| crate::pbd::compute_darboux(&q, &q, l)).collect();
    Rod {
        name: "rod".into(),
        particles,
        segments,
        rest_lengths: vec![l; n_seg],
        rest_darboux,
        radius: 0.004,
    }
}
