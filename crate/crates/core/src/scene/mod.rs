//! Synthetic scene construction: sphere-filled objects from occupancy
//! functions, mass-property integration, rope discretization, splat seeding
//! and anchoring, and the scene-file schema.

mod build;
mod motion;
mod shape;
mod spec;

pub use build::{
    anchor_gaussians, compute_mass_properties, discretize_centerline, fill_spheres,
    seed_gaussians_local, DEFAULT_GRID_PITCH, FILL_SPHERE_RADIUS,
};
pub use motion::{anchor_frame, unit_frames, unit_of, update_gaussians};
pub use shape::{BoxPart, Shape, Texture};
pub use spec::{
    build, sample_script, BuiltScene, ObjectSpec, Perturbations, PusherSpec, RopeSpec, SceneSpec,
    TrackedKind, TrackedObject,
};

/// Scene construction and validation failures.
#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    /// Sphere filling produced no spheres.
    #[error("object '{0}' produced no collision spheres")]
    EmptyObjectIn(String),
    #[error("object produced no collision spheres")]
    EmptyObject,
    /// Rope spacing fell below one sphere diameter.
    #[error("rope '{0}' centerline too short for its segment count")]
    TooShortCurveIn(String),
    #[error("rope centerline too short for its segment count")]
    TooShortCurve,
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("invalid scene: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl SceneError {
    pub(crate) fn with_context(self, name: &str) -> SceneError {
        match self {
            SceneError::EmptyObject => SceneError::EmptyObjectIn(name.to_string()),
            SceneError::TooShortCurve => SceneError::TooShortCurveIn(name.to_string()),
            other => other,
        }
    }
}
