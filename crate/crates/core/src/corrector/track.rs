//! The per-frame prediction-correction step of the digital twin.

use std::time::Instant;

use nalgebra::Vector3;

use crate::math::Pose;
use crate::pbd::{step, ExternalForces, SimConfig, World};
use crate::scene::{sample_script, unit_frames, unit_of, update_gaussians, BuiltScene, TrackedKind, TrackedObject};
use crate::splat::{render, Camera, Gaussian3D};

use super::loss::Observation;
use super::optimize::{optimize_pose, CorrectionGains};
use super::wrench::correction_wrench;

/// When the correction wrench acts: in a dedicated extra PBD step right
/// after optimization (default), or folded into the next frame's prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionMode {
    ExtraStep,
    FoldedIntoNext,
}

/// The tracked digital twin: simulation state plus its bonded splats.
#[derive(Clone, Debug)]
pub struct Twin {
    pub world: World<f64>,
    pub config: SimConfig<f64>,
    pub objects: Vec<TrackedObject>,
    pub base_gaussians: Vec<Gaussian3D<f64>>,
    pub cameras: Vec<Camera<f64>>,
    pub pusher_scripts: Vec<(usize, Vec<(f64, Pose<f64>)>)>,
    pub background: [f64; 3],
    /// Wrench deferred by [`CorrectionMode::FoldedIntoNext`].
    pending: Option<ExternalForces<f64>>,
}

impl Twin {
    pub fn from_scene(scene: BuiltScene, background: [f64; 3]) -> Self {
        Self {
            world: scene.world,
            config: scene.config,
            objects: scene.objects,
            base_gaussians: scene.gaussians,
            cameras: scene.cameras,
            pusher_scripts: scene.pusher_scripts,
            background,
            pending: None,
        }
    }

    /// Splats moved coherently with the current simulation state.
    pub fn current_gaussians(&self) -> Vec<Gaussian3D<f64>> {
        update_gaussians(&self.world, &self.objects, &self.base_gaussians)
    }

    pub fn set_pusher_targets(&mut self, t: f64) {
        for (body, script) in &self.pusher_scripts {
            self.world.bodies[*body].kinematic_target = Some(sample_script(script, t));
        }
    }

    fn object_velocities(&self, object: &TrackedObject) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        match object.kind {
            TrackedKind::Rigid { body } => {
                let b = &self.world.bodies[body];
                vec![(b.velocity, b.angular_velocity)]
            }
            TrackedKind::Rope { rod } => self.world.rods[rod]
                .particles
                .iter()
                .map(|p| (p.velocity, Vector3::zeros()))
                .collect(),
        }
    }

    fn blend_velocities(
        &mut self,
        object: &TrackedObject,
        saved: &[(Vector3<f64>, Vector3<f64>)],
        blend: f64,
    ) {
        match object.kind {
            TrackedKind::Rigid { body } => {
                let b = &mut self.world.bodies[body];
                b.velocity = saved[0].0 + (b.velocity - saved[0].0) * blend;
                b.angular_velocity = saved[0].1 + (b.angular_velocity - saved[0].1) * blend;
            }
            TrackedKind::Rope { rod } => {
                for (p, s) in self.world.rods[rod].particles.iter_mut().zip(saved) {
                    p.velocity = s.0 + (p.velocity - s.0) * blend;
                }
            }
        }
    }
}

/// Per-object correction diagnostics for one frame.
#[derive(Clone, Copy, Debug)]
pub struct ObjectDiagnostics {
    pub corrected: bool,
    pub loss_before: f64,
    pub loss_after: f64,
    pub force_norm: f64,
    pub torque_norm: f64,
}

/// Per-frame diagnostics: correction quality and stage timings (seconds).
#[derive(Clone, Debug, Default)]
pub struct FrameDiagnostics {
    pub objects: Vec<ObjectDiagnostics>,
    pub predict_s: f64,
    pub render_s: f64,
    pub optimize_s: f64,
    pub wrench_s: f64,
    pub step_s: f64,
}

/// Advances the twin by one frame against one observation per tracked
/// object: set kinematics, predict, move splats coherently, optimize the
/// correction transform, convert it into wrenches, and execute the
/// correction step. Objects whose masks are empty in every camera fall back
/// to pure prediction.
pub fn track_step(
    twin: &mut Twin,
    observations: &[Observation<f64>],
    t_frame: f64,
    gains: &CorrectionGains,
    mode: CorrectionMode,
) -> FrameDiagnostics {
    assert_eq!(observations.len(), twin.objects.len(), "one observation per tracked object");
    let mut diag = FrameDiagnostics::default();

    // (1) scripted kinematics, (2) prediction step (with any deferred wrench)
    twin.set_pusher_targets(t_frame);
    let forces = twin.pending.take().unwrap_or_else(|| ExternalForces::zeros(&twin.world));
    let t0 = Instant::now();
    step(&mut twin.world, &twin.config, &forces);
    diag.predict_s = t0.elapsed().as_secs_f64();

    // (3) coherent splat motion
    let t0 = Instant::now();
    let gaussians = twin.current_gaussians();
    diag.render_s = t0.elapsed().as_secs_f64();

    // (4)-(6) per-object optimization and wrench assembly
    let mut correction = ExternalForces::zeros(&twin.world);
    let mut any = false;
    let objects = twin.objects.clone();
    for (object, obs) in objects.iter().zip(observations) {
        if obs.fully_occluded() {
            diag.objects.push(ObjectDiagnostics {
                corrected: false,
                loss_before: f64::NAN,
                loss_after: f64::NAN,
                force_norm: 0.0,
                torque_norm: 0.0,
            });
            continue;
        }
        let object_gaussians = &gaussians[object.gaussians.clone()];
        let unit_ids: Vec<usize> =
            object_gaussians.iter().map(|g| unit_of(object, g)).collect();
        let pivots: Vec<Vector3<f64>> = unit_frames(&twin.world, object)
            .iter()
            .map(|f| f.position)
            .collect();

        let t0 = Instant::now();
        let solved = optimize_pose(
            &pivots,
            object_gaussians,
            &unit_ids,
            &twin.cameras,
            obs,
            twin.background,
            gains,
        );
        diag.optimize_s += t0.elapsed().as_secs_f64();
        let (transform, loss_before, loss_after) = match solved {
            Ok(v) => v,
            Err(_) => {
                diag.objects.push(ObjectDiagnostics {
                    corrected: false,
                    loss_before: f64::NAN,
                    loss_after: f64::NAN,
                    force_norm: 0.0,
                    torque_norm: 0.0,
                });
                continue;
            }
        };

        let t0 = Instant::now();
        let wrench =
            correction_wrench(&transform, object_gaussians, object, &twin.world, gains.k_p);
        diag.wrench_s += t0.elapsed().as_secs_f64();

        match object.kind {
            TrackedKind::Rigid { body } => {
                correction.body_wrenches[body] = (wrench.force, wrench.torque);
            }
            TrackedKind::Rope { rod } => {
                for (pi, f) in wrench.per_particle.iter().enumerate() {
                    correction.rod_forces[rod][pi] = *f;
                }
            }
        }
        any = true;
        diag.objects.push(ObjectDiagnostics {
            corrected: true,
            loss_before,
            loss_after,
            force_norm: wrench.force.norm(),
            torque_norm: wrench.torque.norm(),
        });
    }

    // (7) correction execution
    if any {
        match mode {
            CorrectionMode::ExtraStep => {
                let saved: Vec<_> =
                    objects.iter().map(|o| twin.object_velocities(o)).collect();
                twin.set_pusher_targets(t_frame);
                let t0 = Instant::now();
                step(&mut twin.world, &twin.config, &correction);
                diag.step_s = t0.elapsed().as_secs_f64();
                if gains.velocity_blend < 1.0 {
                    for (object, s) in objects.iter().zip(&saved) {
                        twin.blend_velocities(object, s, gains.velocity_blend);
                    }
                }
            }
            CorrectionMode::FoldedIntoNext => {
                twin.pending = Some(correction);
            }
        }
    }
    diag
}

/// Renders ground-truth observations for every tracked object: shared RGB
/// images of all objects' splats, one silhouette mask per object.
pub fn make_observation(
    world: &World<f64>,
    objects: &[TrackedObject],
    base_gaussians: &[Gaussian3D<f64>],
    cameras: &[Camera<f64>],
    background: [f64; 3],
    timestamp: f64,
) -> Vec<Observation<f64>> {
    let gaussians = update_gaussians(world, objects, base_gaussians);
    let images: Vec<_> = cameras.iter().map(|cam| render(&gaussians, cam, background)).collect();
    objects
        .iter()
        .map(|object| {
            let own = &gaussians[object.gaussians.clone()];
            let masks: Vec<Vec<bool>> = cameras
                .iter()
                .map(|cam| render(own, cam, [0.0; 3]).silhouette(0.5))
                .collect();
            Observation { images: images.clone(), masks, timestamp }
        })
        .collect()
}
