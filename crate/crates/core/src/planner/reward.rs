//! Push rollout and the five-term reward.

use nalgebra::{Vector2, Vector3};

use crate::math::Pose;
use crate::pbd::{step, ExternalForces, SimConfig, World};

use super::action::{wrap_angle, GoalPose, PushAction};

/// Which world entities the planner drives.
#[derive(Clone, Copy, Debug)]
pub struct PlannerContext {
    /// The planned (dynamic) object.
    pub object_body: usize,
    /// The kinematic pusher.
    pub pusher_body: usize,
}

/// Reward weights and push execution parameters.
#[derive(Clone, Copy, Debug)]
pub struct RewardParams {
    /// Squared-position-error weight (1/m^2).
    pub w_pos: f64,
    /// Absolute-yaw-error weight (1/rad).
    pub w_yaw: f64,
    /// Too-close penalty weight (1/m^2) and its threshold distance.
    pub w_prox: f64,
    pub prox_threshold: f64,
    /// Gaussian prior on the polar start radius.
    pub radius_prior_mean: f64,
    pub radius_prior_std: f64,
    /// Zero-mean Gaussian prior on the final offset.
    pub final_prior_std: f64,
    /// Straight-line pusher speed (m/s) and push height (m).
    pub push_speed: f64,
    pub push_height: f64,
    /// Settling time after the pusher stops (s).
    pub settle_time: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            w_pos: 100.0,
            w_yaw: 5.0,
            w_prox: 200.0,
            prox_threshold: 0.08,
            radius_prior_mean: 0.15,
            radius_prior_std: 0.03,
            final_prior_std: 0.05,
            push_speed: 0.05,
            push_height: 0.012,
            settle_time: 0.5,
        }
    }
}

/// The five reward terms; the returned reward is exactly their sum.
#[derive(Clone, Copy, Debug)]
pub struct RewardTerms {
    pub position: f64,
    pub yaw: f64,
    pub proximity: f64,
    pub radius_prior: f64,
    pub final_prior: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.position + self.yaw + self.proximity + self.radius_prior + self.final_prior
    }
}

/// Yaw of a body: the rotation of its x-axis projected onto the world xy
/// plane.
pub fn object_yaw(world: &World<f64>, body: usize) -> f64 {
    let x_axis = world.bodies[body].orientation.transform_vector(&Vector3::x());
    x_axis.y.atan2(x_axis.x)
}

fn log_gaussian(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - (std * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

fn log_gaussian_2d(v: Vector2<f64>, std: f64) -> f64 {
    -0.5 * v.norm_squared() / (std * std) - (2.0 * std::f64::consts::PI * std * std).ln()
}

/// Scripts the pusher along the action's straight line (teleport to the
/// start, constant speed, then settle) and steps the world through it in
/// place. Evaluation and execution share this exact rollout.
pub fn execute_push(
    world: &mut World<f64>,
    config: &SimConfig<f64>,
    ctx: &PlannerContext,
    action: &PushAction,
    params: &RewardParams,
) {
    run_push(world, config, ctx, action, params)
}

/// Evaluates a push on a clone of the world; the original is untouched.
pub fn evaluate_push(
    world: &World<f64>,
    config: &SimConfig<f64>,
    ctx: &PlannerContext,
    action: &PushAction,
    goal: &GoalPose,
    params: &RewardParams,
) -> (f64, RewardTerms) {
    let mut sim = world.clone();
    run_push(&mut sim, config, ctx, action, params);
    let terms = reward_terms(&sim, ctx, action, goal, params);
    (terms.total(), terms)
}

/// The reward terms of the current world state under `action`'s priors.
pub fn reward_terms(
    world: &World<f64>,
    ctx: &PlannerContext,
    action: &PushAction,
    goal: &GoalPose,
    params: &RewardParams,
) -> RewardTerms {
    let pos = world.bodies[ctx.object_body].position;
    let dpos = Vector2::new(pos.x - goal.position.x, pos.y - goal.position.y);
    let dyaw = wrap_angle(object_yaw(world, ctx.object_body) - goal.yaw);
    let too_close = (params.prox_threshold - action.start_radius).max(0.0);
    RewardTerms {
        position: -params.w_pos * dpos.norm_squared(),
        yaw: -params.w_yaw * dyaw.abs(),
        proximity: -params.w_prox * too_close * too_close,
        radius_prior: log_gaussian(
            action.start_radius,
            params.radius_prior_mean,
            params.radius_prior_std,
        ),
        final_prior: log_gaussian_2d(
            Vector2::new(action.end_dx, action.end_dy),
            params.final_prior_std,
        ),
    }
}

/// Runs the push trajectory on `world` in place.
pub fn run_push(
    world: &mut World<f64>,
    config: &SimConfig<f64>,
    ctx: &PlannerContext,
    action: &PushAction,
    params: &RewardParams,
) {
    let center = world.bodies[ctx.object_body].position;
    let start = Vector3::new(
        center.x + action.start_radius * action.start_angle.cos(),
        center.y + action.start_radius * action.start_angle.sin(),
        params.push_height,
    );
    let end =
        Vector3::new(center.x + action.end_dx, center.y + action.end_dy, params.push_height);

    {
        let pusher = &mut world.bodies[ctx.pusher_body];
        let orientation = pusher.orientation;
        pusher.position = start;
        pusher.prev_position = start;
        pusher.velocity = Vector3::zeros();
        pusher.angular_velocity = Vector3::zeros();
        pusher.kinematic_target = Some(Pose::new(start, orientation));
    }

    let distance = (end - start).norm();
    let duration = distance / params.push_speed.max(1e-6);
    let frames = (duration / config.dt).ceil() as usize;
    let forces = ExternalForces::zeros(world);
    for f in 1..=frames {
        let t = (f as f64 * config.dt).min(duration);
        let target = start + (end - start) * (t / duration.max(1e-12));
        let orientation = world.bodies[ctx.pusher_body].orientation;
        world.bodies[ctx.pusher_body].kinematic_target = Some(Pose::new(target, orientation));
        step(world, config, &forces);
    }
    let settle_frames = (params.settle_time / config.dt).ceil() as usize;
    for _ in 0..settle_frames {
        step(world, config, &forces);
    }
}
