//! Push optimization against the simulated dynamics and the sequential
//! push-until-no-improvement loop.

use nalgebra::Vector2;

use crate::pbd::{SimConfig, World};

use super::action::{wrap_angle, GoalPose, PushAction};
use super::gmm::{optimize_gmm, GmmComponent, GmmSettings};
use super::reward::{
    evaluate_push, execute_push, object_yaw, PlannerContext, RewardParams, RewardTerms,
};

/// Upper bound on pushes per episode.
pub const MAX_PUSHES: usize = 6;

/// Optimizes one push by GMM search over cloned-world rollouts. Returns the
/// best action, its evaluated reward, and the reward decomposition.
pub fn optimize_push(
    world: &World<f64>,
    config: &SimConfig<f64>,
    ctx: &PlannerContext,
    goal: &GoalPose,
    params: &RewardParams,
    settings: &GmmSettings,
) -> (PushAction, f64, RewardTerms) {
    let center = world.bodies[ctx.object_body].position;
    let to_goal = Vector2::new(goal.position.x - center.x, goal.position.y - center.y);
    // start behind the object relative to the goal direction; second
    // component a quarter turn off for yaw-dominant pushes
    let behind = if to_goal.norm() > 1e-6 {
        wrap_angle(to_goal.y.atan2(to_goal.x) + std::f64::consts::PI)
    } else {
        0.0
    };
    let reach = to_goal.norm().min(0.06);
    let dir = if to_goal.norm() > 1e-6 { to_goal.normalize() * reach } else { Vector2::zeros() };
    let init = [
        GmmComponent {
            mean: [params.radius_prior_mean, behind, dir.x, dir.y],
            std: [params.radius_prior_std, 0.8, 0.04, 0.04],
            weight: 0.5,
        },
        GmmComponent {
            mean: [
                params.radius_prior_mean,
                wrap_angle(behind + std::f64::consts::FRAC_PI_2),
                dir.x * 0.5,
                dir.y * 0.5,
            ],
            std: [params.radius_prior_std, 0.8, 0.04, 0.04],
            weight: 0.5,
        },
    ];

    let reward = |x: &[f64; 4]| {
        let action = PushAction::from_vec(x);
        evaluate_push(world, config, ctx, &action, goal, params).0
    };
    let (best_vec, best_reward, _) = optimize_gmm(reward, init, settings);
    let best_action = PushAction::from_vec(&best_vec);
    let (_, terms) = evaluate_push(world, config, ctx, &best_action, goal, params);
    (best_action, best_reward, terms)
}

/// One executed push of a planning episode.
#[derive(Clone, Copy, Debug)]
pub struct ExecutedPush {
    pub action: PushAction,
    pub predicted_reward: f64,
    pub position_error: f64,
    pub yaw_error: f64,
}

/// Episode result: executed pushes plus the final errors.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub pushes: Vec<ExecutedPush>,
    pub final_position_error: f64,
    pub final_yaw_error: f64,
}

fn current_errors(world: &World<f64>, ctx: &PlannerContext, goal: &GoalPose) -> (f64, f64) {
    let pos = world.bodies[ctx.object_body].position;
    let dpos = Vector2::new(pos.x - goal.position.x, pos.y - goal.position.y).norm();
    let dyaw = wrap_angle(object_yaw(world, ctx.object_body) - goal.yaw).abs();
    (dpos, dyaw)
}

/// Error-term score of the current state (position and yaw terms only).
/// Improvement is judged on these: the priors regularize the search but do
/// not count toward "significant improvement", otherwise refinement pushes
/// near the goal could never clear the threshold.
fn error_score(
    world: &World<f64>,
    ctx: &PlannerContext,
    goal: &GoalPose,
    params: &RewardParams,
) -> f64 {
    let (dpos, dyaw) = current_errors(world, ctx, goal);
    -params.w_pos * dpos * dpos - params.w_yaw * dyaw
}

/// Repeatedly optimizes and executes pushes on the real world until no push
/// promises a significant improvement (or [`MAX_PUSHES`] is hit).
pub fn plan_sequence(
    world: &mut World<f64>,
    config: &SimConfig<f64>,
    ctx: &PlannerContext,
    goal: &GoalPose,
    params: &RewardParams,
    settings: &GmmSettings,
    improvement_threshold: f64,
) -> PlanOutcome {
    let mut pushes = Vec::new();
    for push_idx in 0..MAX_PUSHES {
        let baseline = error_score(world, ctx, goal, params);
        let mut per_push = *settings;
        per_push.seed = settings.seed.wrapping_add(push_idx as u64);
        let (action, predicted, terms) =
            optimize_push(world, config, ctx, goal, params, &per_push);
        let predicted_errors = terms.position + terms.yaw;
        if !(predicted_errors - baseline >= improvement_threshold) {
            break;
        }
        execute_push(world, config, ctx, &action, params);
        let (pos_err, yaw_err) = current_errors(world, ctx, goal);
        pushes.push(ExecutedPush {
            action,
            predicted_reward: predicted,
            position_error: pos_err,
            yaw_error: yaw_err,
        });
    }
    let (final_position_error, final_yaw_error) = current_errors(world, ctx, goal);
    PlanOutcome { pushes, final_position_error, final_yaw_error }
}
