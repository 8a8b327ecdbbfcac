//! Coherent splat motion: splats follow the motion frame they were anchored
//! to (body frame for rigid objects, segment frame for rods), recomputed
//! from stored local offsets so repeated updates never accumulate drift.

use crate::math::{quat_multiply, Pose};
use crate::pbd::World;
use crate::splat::Gaussian3D;

use super::spec::{TrackedKind, TrackedObject};

/// World state of every tracked splat under the current simulation state.
pub fn update_gaussians(
    world: &World<f64>,
    objects: &[TrackedObject],
    base: &[Gaussian3D<f64>],
) -> Vec<Gaussian3D<f64>> {
    let mut out = base.to_vec();
    for obj in objects {
        for g in &mut out[obj.gaussians.clone()] {
            let frame = anchor_frame(world, obj, g);
            g.mean = frame.transform_point(&g.anchor.local_offset);
            g.orientation = quat_multiply(&frame.orientation, &g.anchor.local_orientation);
        }
    }
    out
}

/// The motion frame a splat of `obj` is bound to.
pub fn anchor_frame(world: &World<f64>, obj: &TrackedObject, g: &Gaussian3D<f64>) -> Pose<f64> {
    match obj.kind {
        TrackedKind::Rigid { body } => world.bodies[body].pose(),
        TrackedKind::Rope { rod } => world.rods[rod].segment_frame(g.anchor.segment),
    }
}

/// Correction-unit frames of one object: the body pose for rigid objects,
/// one frame per segment for rods.
pub fn unit_frames(world: &World<f64>, obj: &TrackedObject) -> Vec<Pose<f64>> {
    match obj.kind {
        TrackedKind::Rigid { body } => vec![world.bodies[body].pose()],
        TrackedKind::Rope { rod } => {
            let r = &world.rods[rod];
            (0..r.segments.len()).map(|k| r.segment_frame(k)).collect()
        }
    }
}

/// The unit index a splat belongs to (0 for rigid; segment index for rods).
pub fn unit_of(obj: &TrackedObject, g: &Gaussian3D<f64>) -> usize {
    match obj.kind {
        TrackedKind::Rigid { .. } => 0,
        TrackedKind::Rope { .. } => g.anchor.segment,
    }
}
