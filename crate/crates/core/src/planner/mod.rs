//! Model-based push planning over the PBD dynamics: a 4D push
//! parameterization, a five-term reward, a 2-component Gaussian-mixture
//! stochastic search, and the push-until-no-improvement sequence loop.

mod action;
mod gmm;
mod reward;
mod sequence;

pub use action::{wrap_angle, GoalPose, PushAction};
pub use gmm::{optimize_gmm, GmmSettings};
pub use reward::{evaluate_push, execute_push, object_yaw, PlannerContext, RewardParams, RewardTerms};
pub use sequence::{optimize_push, plan_sequence, ExecutedPush, PlanOutcome, MAX_PUSHES};
