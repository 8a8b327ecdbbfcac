//! Tracking metrics: translation error, rotation error, and rendered-vs-
//! truth silhouette IoU per camera.

use crate::math::geodesic_angle;
use crate::pbd::World;
use crate::scene::{update_gaussians, TrackedKind, TrackedObject};
use crate::splat::{mask_iou, render, Camera, Gaussian3D};

use super::loss::Observation;

#[derive(Clone, Debug)]
pub struct ObjectMetrics {
    /// COM distance for rigid bodies; mean particle distance for rods.
    pub translation_error: f64,
    /// Geodesic angle for rigid bodies; mean per-segment angle for rods.
    pub rotation_error: f64,
    /// Rendered-silhouette IoU against the observed mask, per camera.
    pub iou: Vec<f64>,
}

/// Pose errors between matched entities of two worlds.
pub fn pose_errors(
    twin: &World<f64>,
    truth: &World<f64>,
    object: &TrackedObject,
) -> (f64, f64) {
    match object.kind {
        TrackedKind::Rigid { body } => {
            let a = &twin.bodies[body];
            let b = &truth.bodies[body];
            ((a.position - b.position).norm(), geodesic_angle(&a.orientation, &b.orientation))
        }
        TrackedKind::Rope { rod } => {
            let a = &twin.rods[rod];
            let b = &truth.rods[rod];
            let te = a
                .particles
                .iter()
                .zip(&b.particles)
                .map(|(x, y)| (x.position - y.position).norm())
                .sum::<f64>()
                / a.particles.len() as f64;
            let re = a
                .segments
                .iter()
                .zip(&b.segments)
                .map(|(x, y)| geodesic_angle(&x.orientation, &y.orientation))
                .sum::<f64>()
                / a.segments.len().max(1) as f64;
            (te, re)
        }
    }
}

/// Full metric set for every tracked object: pose errors against the truth
/// world plus the IoU between the twin's rendered silhouette and the
/// observed object mask in every camera.
pub fn metrics(
    twin_world: &World<f64>,
    truth_world: &World<f64>,
    objects: &[TrackedObject],
    base_gaussians: &[Gaussian3D<f64>],
    observations: &[Observation<f64>],
    cameras: &[Camera<f64>],
) -> Vec<ObjectMetrics> {
    let gaussians = update_gaussians(twin_world, objects, base_gaussians);
    objects
        .iter()
        .zip(observations)
        .map(|(object, obs)| {
            let (te, re) = pose_errors(twin_world, truth_world, object);
            let own = &gaussians[object.gaussians.clone()];
            let iou = cameras
                .iter()
                .zip(&obs.masks)
                .map(|(cam, mask)| {
                    let silhouette = render(own, cam, [0.0; 3]).silhouette(0.5);
                    mask_iou(&silhouette, mask)
                })
                .collect();
            ObjectMetrics { translation_error: te, rotation_error: re, iou }
        })
        .collect()
}
