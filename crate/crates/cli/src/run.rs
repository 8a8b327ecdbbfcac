//! Scenario execution: ground-truth + twin simulation, tracking or
//! planning, metric emission, image dumps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};

use desktwin::corrector::{make_observation, metrics, track_step, Twin};
use desktwin::pbd::{step, ExternalForces, World};
use desktwin::planner::{plan_sequence, GoalPose, PlannerContext};
use desktwin::scene::{build, update_gaussians};
use desktwin::splat::{render, write_ppm};

use crate::report::{EpisodeRow, FrameRow, RunReport, StageTimings, TrajectoryRow};
use crate::scenario::{load_scenario, Mode, Scenario, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Scenario/scene parse or validation failure (exit code 1).
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    /// Failure while executing a valid scenario (exit code 2).
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<desktwin::scene::SceneError> for RunError {
    fn from(e: desktwin::scene::SceneError) -> Self {
        RunError::Scenario(ScenarioError::Scene(e))
    }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub frames: Option<usize>,
    pub mode: Option<String>,
    pub dump_images: Option<usize>,
}

/// Runs a scenario end to end and writes the report files into the output
/// directory. Deterministic per seed.
pub fn run_scenario(path: &Path, overrides: &Overrides) -> Result<RunReport, RunError> {
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    if let Some(out) = &overrides.out_dir {
        scenario.out_dir = out.clone();
    }
    if let Some(mode) = &overrides.mode {
        scenario.mode = Mode::parse(mode)?;
        if scenario.mode == Mode::Plan && scenario.planning.is_none() {
            return Err(ScenarioError::Invalid(vec![
                "plan mode requires a [planning] section".into(),
            ])
            .into());
        }
    }

    let frames = overrides
        .frames
        .unwrap_or_else(|| (scenario.duration / scenario.scene.sim.dt).ceil() as usize);

    let mut report = match scenario.mode {
        Mode::SimOnly => run_sim_only(&scenario, frames)?,
        Mode::Track => run_track(&scenario, frames, overrides.dump_images)?,
        Mode::Plan => run_plan(&scenario)?,
    };
    report.scenario_name = scenario.name.clone();
    report.scene_name = scenario.scene_name.clone();
    report.mode = scenario.mode.as_str().to_string();
    report.duration = scenario.duration;
    report.seed = scenario.seed;
    report.write_to(&scenario.out_dir)?;
    Ok(report)
}

fn record_trajectory(world: &World<f64>, frame: usize, time: f64, rows: &mut Vec<TrajectoryRow>) {
    for body in &world.bodies {
        let q = body.orientation.quaternion();
        rows.push(TrajectoryRow {
            frame,
            time,
            entity: body.name.clone(),
            position: [body.position.x, body.position.y, body.position.z],
            orientation_xyzw: [q.i, q.j, q.k, q.w],
        });
    }
    for rod in &world.rods {
        for (pi, p) in rod.particles.iter().enumerate() {
            rows.push(TrajectoryRow {
                frame,
                time,
                entity: format!("{}:{}", rod.name, pi),
                position: [p.position.x, p.position.y, p.position.z],
                orientation_xyzw: [0.0, 0.0, 0.0, 1.0],
            });
        }
    }
}

fn run_sim_only(scenario: &Scenario, frames: usize) -> Result<RunReport, RunError> {
    let scene = build(&scenario.scene, scenario.seed, None)?;
    let mut twin = Twin::from_scene(scene, scenario.background);
    let forces = ExternalForces::zeros(&twin.world);
    let mut report = RunReport::default();
    let mut timing = StageTimings::default();
    for frame in 0..frames {
        let t = frame as f64 * twin.config.dt;
        twin.set_pusher_targets(t);
        let t0 = Instant::now();
        step(&mut twin.world, &twin.config, &forces);
        timing.predict_s += t0.elapsed().as_secs_f64();
        timing.calls += 1;
        record_trajectory(&twin.world, frame, t, &mut report.trajectory);
    }
    report.timing = timing;
    Ok(report)
}

fn run_track(
    scenario: &Scenario,
    frames: usize,
    dump_stride: Option<usize>,
) -> Result<RunReport, RunError> {
    let truth_scene = build(&scenario.scene, scenario.seed, Some(&scenario.perturbations))?;
    let twin_scene = build(&scenario.scene, scenario.seed, None)?;
    let mut truth = Twin::from_scene(truth_scene, scenario.background);
    let mut twin = Twin::from_scene(twin_scene, scenario.background);
    let settings = &scenario.tracking;

    let mut report = RunReport::default();
    let mut timing = StageTimings::default();
    let truth_forces = ExternalForces::zeros(&truth.world);
    let image_dir = scenario.out_dir.join("images");
    if dump_stride.is_some() {
        std::fs::create_dir_all(&image_dir)?;
    }

    for frame in 0..frames {
        let t = frame as f64 * twin.config.dt;
        truth.set_pusher_targets(t);
        step(&mut truth.world, &truth.config, &truth_forces);

        let t0 = Instant::now();
        let observations = make_observation(
            &truth.world,
            &truth.objects,
            &truth.base_gaussians,
            &truth.cameras,
            scenario.background,
            t,
        );
        timing.render_s += t0.elapsed().as_secs_f64();

        let diag = if settings.correction {
            track_step(&mut twin, &observations, t, &settings.gains, settings.mode)
        } else {
            twin.set_pusher_targets(t);
            let forces = ExternalForces::zeros(&twin.world);
            let t0 = Instant::now();
            step(&mut twin.world, &twin.config, &forces);
            let mut d = desktwin::corrector::FrameDiagnostics::default();
            d.predict_s = t0.elapsed().as_secs_f64();
            d
        };
        timing.predict_s += diag.predict_s;
        timing.render_s += diag.render_s;
        timing.optimize_s += diag.optimize_s;
        timing.wrench_s += diag.wrench_s;
        timing.step_s += diag.step_s;
        timing.calls += 1;

        let frame_metrics = metrics(
            &twin.world,
            &truth.world,
            &twin.objects,
            &twin.base_gaussians,
            &observations,
            &twin.cameras,
        );
        for (oi, (object, m)) in twin.objects.iter().zip(&frame_metrics).enumerate() {
            let od = diag.objects.get(oi);
            report.frames.push(FrameRow {
                frame,
                time: t,
                object: object.name.clone(),
                te: m.translation_error,
                re: m.rotation_error,
                iou: m.iou.clone(),
                loss_pre: od.map(|d| d.loss_before).unwrap_or(0.0),
                loss_post: od.map(|d| d.loss_after).unwrap_or(0.0),
                wrench_force: od.map(|d| d.force_norm).unwrap_or(0.0),
                wrench_torque: od.map(|d| d.torque_norm).unwrap_or(0.0),
            });
        }
        record_trajectory(&twin.world, frame, t, &mut report.trajectory);

        if let Some(stride) = dump_stride {
            if stride > 0 && frame % stride == 0 {
                let gaussians = update_gaussians(&twin.world, &twin.objects, &twin.base_gaussians);
                for (ci, cam) in twin.cameras.iter().enumerate() {
                    let img = render(&gaussians, cam, scenario.background);
                    write_ppm(&img, &image_dir.join(format!("frame{frame:05}_cam{ci}.ppm")))?;
                    write_ppm(
                        &observations[0].images[ci],
                        &image_dir.join(format!("frame{frame:05}_cam{ci}_truth.ppm")),
                    )?;
                }
            }
        }
    }
    report.timing = timing;
    Ok(report)
}

fn run_plan(scenario: &Scenario) -> Result<RunReport, RunError> {
    let planning = scenario.planning.as_ref().expect("validated");
    let scene = build(&scenario.scene, scenario.seed, None)?;
    let object_body = scene
        .world
        .bodies
        .iter()
        .position(|b| b.name == planning.object)
        .ok_or_else(|| RunError::Runtime(format!("object '{}' missing", planning.object)))?;
    let pusher_body = scene
        .world
        .bodies
        .iter()
        .position(|b| b.name == planning.pusher)
        .ok_or_else(|| RunError::Runtime(format!("pusher '{}' missing", planning.pusher)))?;
    let ctx = PlannerContext { object_body, pusher_body };

    let mut report = RunReport::default();
    let mut timing = StageTimings::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scenario.seed);
    let start = scene.world.bodies[object_body].position;

    for goal_idx in 0..planning.goals {
        // uniform over a disc around the start position
        let u: f64 = rng.gen_range(0.0..1.0);
        let angle: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let radius = planning.max_goal_distance * u.sqrt();
        let goal = GoalPose {
            position: Vector2::new(
                start.x + radius * angle.cos(),
                start.y + radius * angle.sin(),
            ),
            yaw: rng.gen_range(-planning.max_goal_yaw..planning.max_goal_yaw),
        };

        let mut world = scene.world.clone();
        let mut settings = planning.settings;
        settings.seed = scenario.seed.wrapping_mul(1000).wrapping_add(goal_idx as u64);
        let t0 = Instant::now();
        let outcome = plan_sequence(
            &mut world,
            &scene.config,
            &ctx,
            &goal,
            &planning.params,
            &settings,
            planning.improvement_threshold,
        );
        timing.step_s += t0.elapsed().as_secs_f64();
        timing.calls += 1;

        for (pi, push) in outcome.pushes.iter().enumerate() {
            report.episodes.push(EpisodeRow {
                goal: goal_idx,
                push: pi,
                action: push.action.to_vec(),
                predicted_reward: push.predicted_reward,
                pos_error: push.position_error,
                yaw_error: push.yaw_error,
            });
        }
        report.final_errors.push((outcome.final_position_error, outcome.final_yaw_error));
    }
    report.timing = timing;
    Ok(report)
}
