//! Scenario files: which scene to load, what mode to run, ground-truth
//! parameter perturbations, and mode-specific settings.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use desktwin::corrector::{CorrectionGains, CorrectionMode};
use desktwin::planner::{GmmSettings, RewardParams};
use desktwin::scene::{Perturbations, SceneSpec};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read '{path}': {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scene error: {0}")]
    Scene(#[from] desktwin::scene::SceneError),
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Track,
    Plan,
    SimOnly,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Track => "track",
            Mode::Plan => "plan",
            Mode::SimOnly => "sim-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ScenarioError> {
        match s {
            "track" => Ok(Mode::Track),
            "plan" => Ok(Mode::Plan),
            "sim-only" => Ok(Mode::SimOnly),
            other => Err(ScenarioError::Invalid(vec![format!(
                "unknown mode '{other}' (expected track | plan | sim-only)"
            )])),
        }
    }
}

/// Tracking settings beyond the core gains.
#[derive(Clone, Copy, Debug)]
pub struct TrackingSettings {
    pub gains: CorrectionGains,
    pub correction: bool,
    pub mode: CorrectionMode,
}

/// Planning settings: search budget, goal sampling, reward parameters.
#[derive(Clone, Debug)]
pub struct PlanningSettings {
    pub goals: usize,
    pub settings: GmmSettings,
    pub params: RewardParams,
    pub improvement_threshold: f64,
    pub max_goal_distance: f64,
    pub max_goal_yaw: f64,
    pub object: String,
    pub pusher: String,
}

/// A fully parsed and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub scene: SceneSpec,
    pub scene_name: String,
    pub mode: Mode,
    pub duration: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub perturbations: Perturbations,
    pub tracking: TrackingSettings,
    pub planning: Option<PlanningSettings>,
    pub background: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    scene: String,
    mode: String,
    duration: f64,
    seed: Option<u64>,
    out_dir: Option<String>,
    background: Option<[f64; 3]>,
    #[serde(default)]
    perturbations: PerturbationsDto,
    #[serde(default)]
    tracking: TrackingDto,
    planning: Option<PlanningDto>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PerturbationsDto {
    density_scale: Option<f64>,
    friction_delta: Option<f64>,
    rod_stiffness_scale: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TrackingDto {
    k_p: Option<f64>,
    adam_lr_translation: Option<f64>,
    adam_lr_rotation: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    steps: Option<usize>,
    velocity_blend: Option<f64>,
    correction: Option<bool>,
    mode: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanningDto {
    goals: usize,
    budget: Option<usize>,
    population: Option<usize>,
    elite_fraction: Option<f64>,
    improvement_threshold: Option<f64>,
    max_goal_distance: Option<f64>,
    max_goal_yaw: Option<f64>,
    object: String,
    pusher: String,
    w_pos: Option<f64>,
    w_yaw: Option<f64>,
    w_prox: Option<f64>,
    prox_threshold: Option<f64>,
    radius_prior_mean: Option<f64>,
    radius_prior_std: Option<f64>,
    final_prior_std: Option<f64>,
    push_speed: Option<f64>,
    push_height: Option<f64>,
    settle_time: Option<f64>,
}

/// Loads a scenario file and its referenced scene (path resolved relative
/// to the scenario file's directory).
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))?;

    let scene_path = path.parent().unwrap_or(Path::new(".")).join(&file.scene);
    let scene_text = std::fs::read_to_string(&scene_path)
        .map_err(|source| ScenarioError::Io { path: scene_path.clone(), source })?;
    let scene = SceneSpec::from_toml_str(&scene_text)?;

    let mode = Mode::parse(&file.mode)?;
    let mut errors = Vec::new();
    if file.duration <= 0.0 {
        errors.push("duration must be positive".into());
    }

    let defaults = CorrectionGains::default();
    let tracking = TrackingSettings {
        gains: CorrectionGains {
            k_p: file.tracking.k_p.unwrap_or(defaults.k_p),
            adam_lr_translation: file
                .tracking
                .adam_lr_translation
                .unwrap_or(defaults.adam_lr_translation),
            adam_lr_rotation: file.tracking.adam_lr_rotation.unwrap_or(defaults.adam_lr_rotation),
            beta1: file.tracking.beta1.unwrap_or(defaults.beta1),
            beta2: file.tracking.beta2.unwrap_or(defaults.beta2),
            steps: file.tracking.steps.unwrap_or(defaults.steps),
            velocity_blend: file.tracking.velocity_blend.unwrap_or(defaults.velocity_blend),
        },
        correction: file.tracking.correction.unwrap_or(true),
        mode: match file.tracking.mode.as_deref() {
            None | Some("extra-step") => CorrectionMode::ExtraStep,
            Some("folded") => CorrectionMode::FoldedIntoNext,
            Some(other) => {
                errors.push(format!("unknown correction mode '{other}'"));
                CorrectionMode::ExtraStep
            }
        },
    };

    let planning = match (&file.planning, mode) {
        (Some(p), _) => {
            if !scene.objects.iter().any(|o| o.name == p.object) {
                errors.push(format!("planning.object '{}' is not an object in the scene", p.object));
            }
            if !scene.pushers.iter().any(|q| q.name == p.pusher) {
                errors.push(format!("planning.pusher '{}' is not a pusher in the scene", p.pusher));
            }
            if p.goals == 0 {
                errors.push("planning.goals must be at least 1".into());
            }
            let d = RewardParams::default();
            let g = GmmSettings::default();
            Some(PlanningSettings {
                goals: p.goals,
                settings: GmmSettings {
                    budget: p.budget.unwrap_or(g.budget),
                    population: p.population.unwrap_or(g.population),
                    elite_fraction: p.elite_fraction.unwrap_or(g.elite_fraction),
                    seed: 0,
                },
                params: RewardParams {
                    w_pos: p.w_pos.unwrap_or(d.w_pos),
                    w_yaw: p.w_yaw.unwrap_or(d.w_yaw),
                    w_prox: p.w_prox.unwrap_or(d.w_prox),
                    prox_threshold: p.prox_threshold.unwrap_or(d.prox_threshold),
                    radius_prior_mean: p.radius_prior_mean.unwrap_or(d.radius_prior_mean),
                    radius_prior_std: p.radius_prior_std.unwrap_or(d.radius_prior_std),
                    final_prior_std: p.final_prior_std.unwrap_or(d.final_prior_std),
                    push_speed: p.push_speed.unwrap_or(d.push_speed),
                    push_height: p.push_height.unwrap_or(d.push_height),
                    settle_time: p.settle_time.unwrap_or(d.settle_time),
                },
                improvement_threshold: p.improvement_threshold.unwrap_or(1.0),
                max_goal_distance: p.max_goal_distance.unwrap_or(0.08),
                max_goal_yaw: p.max_goal_yaw.unwrap_or(0.6),
                object: p.object.clone(),
                pusher: p.pusher.clone(),
            })
        }
        (None, Mode::Plan) => {
            errors.push("plan mode requires a [planning] section".into());
            None
        }
        (None, _) => None,
    };

    if mode == Mode::Track {
        if scene.cameras.is_empty() {
            errors.push("track mode requires at least one camera".into());
        }
        if scene.objects.is_empty() && scene.ropes.is_empty() {
            errors.push("track mode requires at least one tracked object".into());
        }
    }

    if !errors.is_empty() {
        return Err(ScenarioError::Invalid(errors));
    }

    let name = file.name.unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    Ok(Scenario {
        name,
        scene_name: scene.name.clone(),
        scene,
        mode,
        duration: file.duration,
        seed: file.seed.unwrap_or(0),
        out_dir: PathBuf::from(file.out_dir.unwrap_or_else(|| "out".into())),
        perturbations: Perturbations {
            density_scale: file.perturbations.density_scale.unwrap_or(1.0),
            friction_delta: file.perturbations.friction_delta.unwrap_or(0.0),
            rod_stiffness_scale: file.perturbations.rod_stiffness_scale.unwrap_or(1.0),
        },
        tracking,
        planning,
        background: file.background.unwrap_or([0.0, 0.0, 0.0]),
    })
}
