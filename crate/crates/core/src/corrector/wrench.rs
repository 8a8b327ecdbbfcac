//! Correction forces and torques from an optimized transform:
//! `f_i = K_p (Σ_j T(μ_j) - μ_j) / N_i` per particle, aggregated into a
//! force and a moment about the center of mass for rigid bodies.

use nalgebra::Vector3;

use crate::scene::{unit_of, TrackedKind, TrackedObject};
use crate::pbd::World;
use crate::splat::Gaussian3D;

use super::transform::CorrectionTransform;

/// The wrench produced by one object's correction transform.
#[derive(Clone, Debug)]
pub struct ObjectWrench {
    /// Force per anchor particle (sphere index for rigid bodies, particle
    /// index for rods).
    pub per_particle: Vec<Vector3<f64>>,
    /// Sum of the particle forces.
    pub force: Vector3<f64>,
    /// Moment about the center of mass, `Σ_j r_j × f_j` with `r_j` from the
    /// COM to the transformed splat position.
    pub torque: Vector3<f64>,
}

/// Evaluates the correction wrench for one object. `current` are the
/// object's splats at the predicted state (the state the transform was
/// optimized against).
pub fn correction_wrench(
    transform: &CorrectionTransform<f64>,
    current: &[Gaussian3D<f64>],
    object: &TrackedObject,
    world: &World<f64>,
    k_p: f64,
) -> ObjectWrench {
    let n_particles = match object.kind {
        TrackedKind::Rigid { body } => world.bodies[body].spheres.len(),
        TrackedKind::Rope { rod } => world.rods[rod].particles.len(),
    };
    let com = match object.kind {
        TrackedKind::Rigid { body } => world.bodies[body].position,
        TrackedKind::Rope { rod } => {
            let r = &world.rods[rod];
            let total: f64 = r.particles.iter().map(|p| p.mass).sum();
            r.particles.iter().map(|p| p.position * p.mass).sum::<Vector3<f64>>() / total
        }
    };

    let mut counts = vec![0usize; n_particles];
    for g in current {
        counts[g.anchor.sphere] += 1;
    }

    let mut per_particle = vec![Vector3::zeros(); n_particles];
    let mut torque = Vector3::zeros();
    for g in current {
        let u = unit_of(object, g);
        let transformed = transform.units[u].apply(&g.mean);
        let displacement = transformed - g.mean;
        let n_i = counts[g.anchor.sphere] as f64;
        let f_j = displacement * (k_p / n_i);
        per_particle[g.anchor.sphere] += f_j;
        torque += (transformed - com).cross(&f_j);
    }
    let force = per_particle.iter().sum();
    ObjectWrench { per_particle, force, torque }
}
