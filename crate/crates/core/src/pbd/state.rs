//! State containers for the unified PBD world: particles, rigid bodies,
//! Cosserat rods, and the simulation configuration.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::collision::GroundPlane;
use crate::math::{quat_rotate, real, Pose, Real};

/// One centerline particle of a rod (or any free sphere particle).
#[derive(Clone, Debug)]
pub struct Particle<T: Real> {
    pub mass: T,
    /// `1/mass`; zero encodes a kinematic (infinite-mass) particle.
    pub inv_mass: T,
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub radius: T,
    /// Position cached at the start of the current substep.
    pub prev_position: Vector3<T>,
}

impl<T: Real> Particle<T> {
    pub fn new(mass: T, position: Vector3<T>, radius: T) -> Self {
        let inv_mass = if mass > T::zero() { T::one() / mass } else { T::zero() };
        Self { mass, inv_mass, position, velocity: Vector3::zeros(), radius, prev_position: position }
    }

    pub fn kinematic(position: Vector3<T>, radius: T) -> Self {
        Self {
            mass: T::zero(),
            inv_mass: T::zero(),
            position,
            velocity: Vector3::zeros(),
            radius,
            prev_position: position,
        }
    }

    #[inline]
    pub fn is_kinematic(&self) -> bool {
        self.inv_mass == T::zero()
    }
}

/// Collision sphere attached to a rigid body, in the body frame.
#[derive(Clone, Copy, Debug)]
pub struct CollisionSphere<T: Real> {
    pub offset: Vector3<T>,
    pub radius: T,
}

/// Rigid body state. `position` is the center of mass; the inertia tensor is
/// stored in the body frame and the world-frame inverse is always recomputed
/// from the current orientation.
#[derive(Clone, Debug)]
pub struct RigidBody<T: Real> {
    pub name: String,
    pub mass: T,
    pub inv_mass: T,
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
    /// Angular velocity in the world frame.
    pub angular_velocity: Vector3<T>,
    pub inertia_body: Matrix3<T>,
    pub inv_inertia_body: Matrix3<T>,
    pub spheres: Vec<CollisionSphere<T>>,
    /// Spheres of bodies sharing a nonzero group never collide with each
    /// other (robot links, pusher assemblies).
    pub collision_group: u32,
    pub prev_position: Vector3<T>,
    pub prev_orientation: UnitQuaternion<T>,
    /// Scripted pose this body should reach at the end of the current frame.
    /// Only honored for kinematic bodies.
    pub kinematic_target: Option<Pose<T>>,
}

impl<T: Real> RigidBody<T> {
    /// Dynamic body from mass properties and a collision-sphere compound.
    pub fn new_dynamic(
        name: impl Into<String>,
        mass: T,
        inertia_body: Matrix3<T>,
        pose: Pose<T>,
        spheres: Vec<CollisionSphere<T>>,
    ) -> Self {
        let inv_inertia_body = inertia_body.try_inverse().expect("inertia must be invertible");
        Self {
            name: name.into(),
            mass,
            inv_mass: T::one() / mass,
            position: pose.position,
            velocity: Vector3::zeros(),
            orientation: pose.orientation,
            angular_velocity: Vector3::zeros(),
            inertia_body,
            inv_inertia_body,
            spheres,
            collision_group: 0,
            prev_position: pose.position,
            prev_orientation: pose.orientation,
            kinematic_target: None,
        }
    }

    /// Kinematic (scripted, infinite-mass) body.
    pub fn new_kinematic(
        name: impl Into<String>,
        pose: Pose<T>,
        spheres: Vec<CollisionSphere<T>>,
    ) -> Self {
        Self {
            name: name.into(),
            mass: T::zero(),
            inv_mass: T::zero(),
            position: pose.position,
            velocity: Vector3::zeros(),
            orientation: pose.orientation,
            angular_velocity: Vector3::zeros(),
            inertia_body: Matrix3::zeros(),
            inv_inertia_body: Matrix3::zeros(),
            spheres,
            collision_group: 0,
            prev_position: pose.position,
            prev_orientation: pose.orientation,
            kinematic_target: None,
        }
    }

    #[inline]
    pub fn is_kinematic(&self) -> bool {
        self.inv_mass == T::zero()
    }

    #[inline]
    pub fn pose(&self) -> Pose<T> {
        Pose::new(self.position, self.orientation)
    }

    /// World-frame inverse inertia `R I_body^-1 R^T`, recomputed on demand.
    pub fn inv_inertia_world(&self) -> Matrix3<T> {
        let r = self.orientation.to_rotation_matrix();
        r.matrix() * self.inv_inertia_body * r.matrix().transpose()
    }

    /// World-space center and radius of collision sphere `i`.
    pub fn world_sphere(&self, i: usize) -> (Vector3<T>, T) {
        let s = &self.spheres[i];
        (quat_rotate(&self.orientation, &s.offset) + self.position, s.radius)
    }
}

/// Oriented rod segment between two adjacent centerline particles.
#[derive(Clone, Debug)]
pub struct Segment<T: Real> {
    pub orientation: UnitQuaternion<T>,
    pub angular_velocity: Vector3<T>,
    /// Inverse of the scalar rotational mass `m_q`.
    pub inv_mq: T,
    pub prev_orientation: UnitQuaternion<T>,
}

/// Deformable linear object: centerline particles plus oriented segments
/// with rest lengths and rest Darboux vectors.
#[derive(Clone, Debug)]
pub struct Rod<T: Real> {
    pub name: String,
    pub particles: Vec<Particle<T>>,
    pub segments: Vec<Segment<T>>,
    pub rest_lengths: Vec<T>,
    pub rest_darboux: Vec<Vector3<T>>,
    pub radius: T,
}

impl<T: Real> Rod<T> {
    /// Midpoint/orientation frame of segment `k`, used for anchoring splats.
    pub fn segment_frame(&self, k: usize) -> Pose<T> {
        let a = self.particles[k].position;
        let b = self.particles[k + 1].position;
        Pose::new((a + b) * real::<T>(0.5), self.segments[k].orientation)
    }
}

/// Simulation configuration for [`super::step`].
#[derive(Clone, Copy, Debug)]
pub struct SimConfig<T: Real> {
    /// Frame period in seconds.
    pub dt: T,
    pub num_substeps: usize,
    pub solver_iterations: usize,
    pub gravity: Vector3<T>,
    /// Per-substep velocity scaling in `[0, 1]`.
    pub velocity_damping: T,
    /// Position-level Coulomb friction on contacts.
    pub friction: bool,
    pub friction_mu: T,
    /// Extra distance at which collision pairs activate.
    pub contact_margin: T,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: real(0.04),
            num_substeps: 10,
            solver_iterations: 10,
            gravity: Vector3::new(T::zero(), T::zero(), real(-9.81)),
            velocity_damping: real(0.999),
            friction: true,
            friction_mu: real(0.3),
            contact_margin: real(5e-4),
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if self.dt <= T::zero() {
            return Err("dt must be positive".into());
        }
        if self.num_substeps < 1 || self.solver_iterations < 1 {
            return Err("substeps and solver iterations must be at least 1".into());
        }
        if self.velocity_damping < T::zero() || self.velocity_damping > T::one() {
            return Err("velocity_damping must be in [0, 1]".into());
        }
        Ok(())
    }
}

/// The simulation world: rigid bodies, rods, and an optional ground plane.
#[derive(Clone, Debug, Default)]
pub struct World<T: Real> {
    pub bodies: Vec<RigidBody<T>>,
    pub rods: Vec<Rod<T>>,
    pub ground: Option<GroundPlane<T>>,
}

impl<T: Real> World<T> {
    pub fn new() -> Self {
        Self { bodies: Vec::new(), rods: Vec::new(), ground: None }
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty() && self.rods.is_empty()
    }
}

/// External forces and torques applied during prediction, aligned with the
/// world layout. Correction wrenches from the tracking loop enter here.
#[derive(Clone, Debug, Default)]
pub struct ExternalForces<T: Real> {
    /// One (force, torque) wrench per rigid body.
    pub body_wrenches: Vec<(Vector3<T>, Vector3<T>)>,
    /// One force per rod particle.
    pub rod_forces: Vec<Vec<Vector3<T>>>,
}

impl<T: Real> ExternalForces<T> {
    pub fn zeros(world: &World<T>) -> Self {
        Self {
            body_wrenches: vec![(Vector3::zeros(), Vector3::zeros()); world.bodies.len()],
            rod_forces: world.rods.iter().map(|r| vec![Vector3::zeros(); r.particles.len()]).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.body_wrenches.is_empty() && self.rod_forces.is_empty()
    }
}
