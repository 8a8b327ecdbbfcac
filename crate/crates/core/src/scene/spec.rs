//! Scene description: parsed spec types, the TOML schema, validation, and
//! assembly into a simulation world with seeded splats.
//!
//! The on-disk format is a TOML tree; all lengths are meters, angles
//! radians, colors 0-1 RGB triples, quaternions serialized `(x, y, z, w)`.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::collision::GroundPlane;
use crate::math::Pose;
use crate::pbd::{CollisionSphere, RigidBody, SimConfig, World};
use crate::splat::{Camera, Gaussian3D};

use super::build::{
    anchor_gaussians, compute_mass_properties, discretize_centerline, fill_spheres,
    seed_gaussians_local, DEFAULT_GRID_PITCH,
};
use super::shape::{BoxPart, Shape, Texture};
use super::SceneError;

#[derive(Clone, Debug)]
pub struct ObjectSpec {
    pub name: String,
    pub shape: Shape<f64>,
    pub density: f64,
    pub pose: Pose<f64>,
    pub texture: Texture,
}

#[derive(Clone, Debug)]
pub struct RopeSpec {
    pub name: String,
    /// Ordered world-frame centerline samples.
    pub samples: Vec<Vector3<f64>>,
    pub radius: f64,
    pub linear_density: f64,
    pub segment_count: usize,
    pub texture: Texture,
}

#[derive(Clone, Debug)]
pub struct PusherSpec {
    pub name: String,
    /// Body-frame collision spheres `(offset, radius)`.
    pub spheres: Vec<(Vector3<f64>, f64)>,
    /// Time-stamped poses, strictly increasing timestamps.
    pub script: Vec<(f64, Pose<f64>)>,
}

#[derive(Clone, Debug)]
pub struct SceneSpec {
    pub name: String,
    pub ground: Option<GroundPlane<f64>>,
    pub sim: SimConfig<f64>,
    pub count_per_sphere: usize,
    pub objects: Vec<ObjectSpec>,
    pub ropes: Vec<RopeSpec>,
    pub pushers: Vec<PusherSpec>,
    pub cameras: Vec<Camera<f64>>,
}

/// Ground-truth world parameter deltas emulating the real-to-sim gap.
#[derive(Clone, Copy, Debug)]
pub struct Perturbations {
    pub density_scale: f64,
    pub friction_delta: f64,
    pub rod_stiffness_scale: f64,
}

impl Default for Perturbations {
    fn default() -> Self {
        Self { density_scale: 1.0, friction_delta: 0.0, rod_stiffness_scale: 1.0 }
    }
}

/// What kind of entity a tracked object maps to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackedKind {
    Rigid { body: usize },
    Rope { rod: usize },
}

/// One trackable object: its world entity and the splat range seeded for it.
#[derive(Clone, Debug)]
pub struct TrackedObject {
    pub name: String,
    pub kind: TrackedKind,
    pub gaussians: std::ops::Range<usize>,
}

/// A scene realized into simulation state.
#[derive(Clone, Debug)]
pub struct BuiltScene {
    pub world: World<f64>,
    pub config: SimConfig<f64>,
    pub gaussians: Vec<Gaussian3D<f64>>,
    pub objects: Vec<TrackedObject>,
    pub cameras: Vec<Camera<f64>>,
    /// Per-pusher `(body index, script)`.
    pub pusher_scripts: Vec<(usize, Vec<(f64, Pose<f64>)>)>,
}

impl BuiltScene {
    /// Sets every pusher's kinematic target to its scripted pose at `t`.
    pub fn set_pusher_targets(&mut self, t: f64) {
        for (body, script) in &self.pusher_scripts {
            self.world.bodies[*body].kinematic_target = Some(sample_script(script, t));
        }
    }
}

/// Piecewise-linear (slerp for orientation) script sampling, clamped to the
/// first/last keyframe outside the scripted range.
pub fn sample_script(script: &[(f64, Pose<f64>)], t: f64) -> Pose<f64> {
    assert!(!script.is_empty());
    if t <= script[0].0 {
        return script[0].1;
    }
    if t >= script[script.len() - 1].0 {
        return script[script.len() - 1].1;
    }
    let mut i = 0;
    while script[i + 1].0 < t {
        i += 1;
    }
    let (t0, a) = script[i];
    let (t1, b) = script[i + 1];
    let f = (t - t0) / (t1 - t0);
    Pose::new(
        a.position + (b.position - a.position) * f,
        a.orientation.slerp(&b.orientation, f),
    )
}

/// Builds twin-ready simulation state from a scene spec. `perturb` applies
/// the ground-truth parameter deltas; splat seeding consumes the RNG stream
/// identically either way, so truth and twin share initial splats.
pub fn build(
    spec: &SceneSpec,
    seed: u64,
    perturb: Option<&Perturbations>,
) -> Result<BuiltScene, SceneError> {
    let perturb = perturb.copied().unwrap_or_default();
    let mut config = spec.sim;
    config.friction_mu = (config.friction_mu + perturb.friction_delta).max(0.0);

    let mut world = World::new();
    world.ground = spec.ground;
    let mut gaussians = Vec::new();
    let mut objects = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for obj in &spec.objects {
        let spheres_local =
            fill_spheres(&obj.shape, DEFAULT_GRID_PITCH, &obj.pose, spec.ground.as_ref())
                .map_err(|e| e.with_context(&obj.name))?;
        let density = obj.density * perturb.density_scale;
        let (mass, com_local, inertia) = compute_mass_properties(&spheres_local, density);
        let body_pose = Pose::new(obj.pose.transform_point(&com_local), obj.pose.orientation);
        let spheres: Vec<CollisionSphere<f64>> = spheres_local
            .iter()
            .map(|(c, r)| CollisionSphere { offset: c - com_local, radius: *r })
            .collect();
        let body = RigidBody::new_dynamic(obj.name.clone(), mass, inertia, body_pose, spheres);
        let body_index = world.bodies.len();
        world.bodies.push(body);

        let local = seed_gaussians_local(&spheres_local, &obj.texture, spec.count_per_sphere, &mut rng);
        let centers: Vec<Vector3<f64>> = spheres_local.iter().map(|(c, _)| *c).collect();
        let positions: Vec<Vector3<f64>> = local.iter().map(|g| g.mean).collect();
        let anchors = anchor_gaussians(&positions, &centers);
        let start = gaussians.len();
        for (mut g, anchor) in local.into_iter().zip(anchors) {
            g.anchor.sphere = anchor;
            g.anchor.segment = 0;
            g.anchor.local_offset = g.mean - com_local;
            g.anchor.local_orientation = g.orientation;
            // to world
            g.mean = obj.pose.transform_point(&g.mean);
            g.orientation = crate::math::quat_multiply(&obj.pose.orientation, &g.orientation);
            gaussians.push(g);
        }
        objects.push(TrackedObject {
            name: obj.name.clone(),
            kind: TrackedKind::Rigid { body: body_index },
            gaussians: start..gaussians.len(),
        });
    }

    for rope in &spec.ropes {
        let mut rod = discretize_centerline(
            &rope.samples,
            rope.segment_count,
            rope.radius,
            rope.linear_density,
        )
        .map_err(|e| e.with_context(&rope.name))?;
        rod.name = rope.name.clone();
        for s in &mut rod.segments {
            s.inv_mq /= perturb.rod_stiffness_scale;
        }
        let rod_index = world.rods.len();

        let particle_spheres: Vec<(Vector3<f64>, f64)> =
            rod.particles.iter().map(|p| (p.position, p.radius)).collect();
        let local =
            seed_gaussians_local(&particle_spheres, &rope.texture, spec.count_per_sphere, &mut rng);
        let centers: Vec<Vector3<f64>> = particle_spheres.iter().map(|(c, _)| *c).collect();
        let positions: Vec<Vector3<f64>> = local.iter().map(|g| g.mean).collect();
        let anchors = anchor_gaussians(&positions, &centers);
        let midpoints: Vec<Vector3<f64>> = (0..rod.segments.len())
            .map(|k| (rod.particles[k].position + rod.particles[k + 1].position) * 0.5)
            .collect();
        let start = gaussians.len();
        for (mut g, anchor) in local.into_iter().zip(anchors) {
            g.anchor.sphere = anchor;
            g.anchor.segment = anchor_gaussians(&[g.mean], &midpoints)[0];
            let frame = rod.segment_frame(g.anchor.segment);
            g.anchor.local_offset = frame.inverse_transform_point(&g.mean);
            g.anchor.local_orientation =
                crate::math::quat_multiply(&frame.orientation.inverse(), &g.orientation);
            gaussians.push(g);
        }
        world.rods.push(rod);
        objects.push(TrackedObject {
            name: rope.name.clone(),
            kind: TrackedKind::Rope { rod: rod_index },
            gaussians: start..gaussians.len(),
        });
    }

    let mut pusher_scripts = Vec::new();
    for pusher in &spec.pushers {
        let pose = sample_script(&pusher.script, 0.0);
        let spheres = pusher
            .spheres
            .iter()
            .map(|(o, r)| CollisionSphere { offset: *o, radius: *r })
            .collect();
        let mut body = RigidBody::new_kinematic(pusher.name.clone(), pose, spheres);
        body.collision_group = 1;
        body.kinematic_target = Some(pose);
        pusher_scripts.push((world.bodies.len(), pusher.script.clone()));
        world.bodies.push(body);
    }

    Ok(BuiltScene {
        world,
        config,
        gaussians,
        objects,
        cameras: spec.cameras.clone(),
        pusher_scripts,
    })
}

// ---------------------------------------------------------------------------
// TOML schema
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    name: String,
    ground: Option<GroundDto>,
    #[serde(default)]
    sim: SimDto,
    #[serde(default)]
    splats: SplatsDto,
    #[serde(default)]
    objects: Vec<ObjectDto>,
    #[serde(default)]
    ropes: Vec<RopeDto>,
    #[serde(default)]
    pushers: Vec<PusherDto>,
    #[serde(default)]
    cameras: Vec<CameraDto>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundDto {
    normal: [f64; 3],
    offset: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimDto {
    dt: Option<f64>,
    substeps: Option<usize>,
    iterations: Option<usize>,
    gravity: Option<[f64; 3]>,
    velocity_damping: Option<f64>,
    friction: Option<bool>,
    friction_mu: Option<f64>,
    contact_margin: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplatsDto {
    count_per_sphere: usize,
}

impl Default for SplatsDto {
    fn default() -> Self {
        Self { count_per_sphere: 6 }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDto {
    name: String,
    density: f64,
    position: [f64; 3],
    orientation: Option<[f64; 4]>,
    shape: ShapeDto,
    texture: TextureDto,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ShapeDto {
    Box { extents: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    Tee { bar: [f64; 3], stem: [f64; 3] },
    Boxes { parts: Vec<BoxPartDto> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxPartDto {
    center: [f64; 3],
    extents: [f64; 3],
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum TextureDto {
    Solid { color: [f64; 3] },
    Checker { colors: [[f64; 3]; 2], cell: f64 },
    Palette { colors: Vec<[f64; 3]> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RopeDto {
    name: String,
    radius: f64,
    linear_density: f64,
    segments: usize,
    centerline: CenterlineDto,
    texture: TextureDto,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum CenterlineDto {
    Line { start: [f64; 3], end: [f64; 3] },
    Arc { center: [f64; 3], radius: f64, start_deg: f64, end_deg: f64 },
    Points { points: Vec<[f64; 3]> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PusherDto {
    name: String,
    /// `[x, y, z, radius]` per sphere.
    spheres: Vec<[f64; 4]>,
    script: Vec<KeyframeDto>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeDto {
    t: f64,
    position: [f64; 3],
    orientation: Option<[f64; 4]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDto {
    position: [f64; 3],
    look_at: [f64; 3],
    up: Option<[f64; 3]>,
    fov_deg: f64,
    width: usize,
    height: usize,
    near: f64,
    far: f64,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

/// Quaternion from `(x, y, z, w)` storage order.
fn quat_xyzw(a: [f64; 4]) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(Quaternion::new(a[3], a[0], a[1], a[2]))
}

fn texture(dto: &TextureDto) -> Texture {
    match dto {
        TextureDto::Solid { color } => Texture::Solid { color: *color },
        TextureDto::Checker { colors, cell } =>
            Texture::Checker { a: colors[0], b: colors[1], cell: *cell },
        TextureDto::Palette { colors } => Texture::Palette { colors: colors.clone() },
    }
}

impl SceneSpec {
    /// Parses and validates a scene file. Validation reports every violated
    /// invariant, not just the first.
    pub fn from_toml_str(text: &str) -> Result<Self, SceneError> {
        let file: SceneFile =
            toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;

        let defaults = SimConfig::<f64>::default();
        let sim = SimConfig {
            dt: file.sim.dt.unwrap_or(defaults.dt),
            num_substeps: file.sim.substeps.unwrap_or(defaults.num_substeps),
            solver_iterations: file.sim.iterations.unwrap_or(defaults.solver_iterations),
            gravity: file.sim.gravity.map(v3).unwrap_or(defaults.gravity),
            velocity_damping: file.sim.velocity_damping.unwrap_or(defaults.velocity_damping),
            friction: file.sim.friction.unwrap_or(defaults.friction),
            friction_mu: file.sim.friction_mu.unwrap_or(defaults.friction_mu),
            contact_margin: file.sim.contact_margin.unwrap_or(defaults.contact_margin),
        };

        let spec = SceneSpec {
            name: file.name,
            ground: file.ground.map(|g| GroundPlane::new(v3(g.normal), g.offset)),
            sim,
            count_per_sphere: file.splats.count_per_sphere,
            objects: file
                .objects
                .iter()
                .map(|o| ObjectSpec {
                    name: o.name.clone(),
                    shape: match &o.shape {
                        ShapeDto::Box { extents } => Shape::Box { extents: v3(*extents) },
                        ShapeDto::Cylinder { radius, height } =>
                            Shape::Cylinder { radius: *radius, height: *height },
                        ShapeDto::Tee { bar, stem } =>
                            Shape::Tee { bar: v3(*bar), stem: v3(*stem) },
                        ShapeDto::Boxes { parts } => Shape::Boxes(
                            parts
                                .iter()
                                .map(|p| BoxPart { center: v3(p.center), extents: v3(p.extents) })
                                .collect(),
                        ),
                    },
                    density: o.density,
                    pose: Pose::new(
                        v3(o.position),
                        o.orientation.map(quat_xyzw).unwrap_or_else(UnitQuaternion::identity),
                    ),
                    texture: texture(&o.texture),
                })
                .collect(),
            ropes: file
                .ropes
                .iter()
                .map(|r| RopeSpec {
                    name: r.name.clone(),
                    samples: match &r.centerline {
                        CenterlineDto::Line { start, end } => {
                            let (a, b) = (v3(*start), v3(*end));
                            (0..64).map(|i| a + (b - a) * (i as f64 / 63.0)).collect()
                        }
                        CenterlineDto::Arc { center, radius, start_deg, end_deg } => (0..256)
                            .map(|i| {
                                let t = i as f64 / 255.0;
                                let a = (start_deg + (end_deg - start_deg) * t).to_radians();
                                v3(*center)
                                    + Vector3::new(*radius * a.cos(), *radius * a.sin(), 0.0)
                            })
                            .collect(),
                        CenterlineDto::Points { points } =>
                            points.iter().map(|p| v3(*p)).collect(),
                    },
                    radius: r.radius,
                    linear_density: r.linear_density,
                    segment_count: r.segments,
                    texture: texture(&r.texture),
                })
                .collect(),
            pushers: file
                .pushers
                .iter()
                .map(|p| PusherSpec {
                    name: p.name.clone(),
                    spheres: p
                        .spheres
                        .iter()
                        .map(|s| (Vector3::new(s[0], s[1], s[2]), s[3]))
                        .collect(),
                    script: p
                        .script
                        .iter()
                        .map(|k| {
                            (
                                k.t,
                                Pose::new(
                                    v3(k.position),
                                    k.orientation
                                        .map(quat_xyzw)
                                        .unwrap_or_else(UnitQuaternion::identity),
                                ),
                            )
                        })
                        .collect(),
                })
                .collect(),
            cameras: file
                .cameras
                .iter()
                .map(|c| {
                    Camera::look_at(
                        v3(c.position),
                        v3(c.look_at),
                        c.up.map(v3).unwrap_or_else(Vector3::z),
                        c.fov_deg.to_radians(),
                        c.width,
                        c.height,
                        c.near,
                        c.far,
                    )
                })
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut errors = Vec::new();
        if let Err(e) = self.sim.validate() {
            errors.push(format!("sim: {e}"));
        }
        if self.count_per_sphere < 1 {
            errors.push("splats.count_per_sphere must be at least 1".into());
        }
        let mut names = std::collections::HashSet::new();
        let mut check_name = |name: &str, errors: &mut Vec<String>| {
            if !names.insert(name.to_string()) {
                errors.push(format!("duplicate entity name '{name}'"));
            }
        };
        for o in &self.objects {
            check_name(&o.name, &mut errors);
            if o.density <= 0.0 {
                errors.push(format!("object '{}': density must be positive", o.name));
            }
            if let Err(e) = o.shape.validate() {
                errors.push(format!("object '{}': {e}", o.name));
            }
        }
        for r in &self.ropes {
            check_name(&r.name, &mut errors);
            if r.segment_count < 2 {
                errors.push(format!("rope '{}': segments must be at least 2", r.name));
            }
            if r.radius <= 0.0 {
                errors.push(format!("rope '{}': radius must be positive", r.name));
            }
            if r.linear_density <= 0.0 {
                errors.push(format!("rope '{}': linear_density must be positive", r.name));
            }
            if r.samples.len() < 2 {
                errors.push(format!("rope '{}': centerline needs at least 2 points", r.name));
            }
        }
        for p in &self.pushers {
            check_name(&p.name, &mut errors);
            if p.spheres.is_empty() {
                errors.push(format!("pusher '{}': needs at least one sphere", p.name));
            }
            if p.script.is_empty() {
                errors.push(format!("pusher '{}': script must not be empty", p.name));
            }
            for w in p.script.windows(2) {
                if w[1].0 <= w[0].0 {
                    errors.push(format!(
                        "pusher '{}': script timestamps must be strictly increasing",
                        p.name
                    ));
                    break;
                }
            }
        }
        for (i, c) in self.cameras.iter().enumerate() {
            if c.near >= c.far {
                errors.push(format!("camera {i}: near must be below far"));
            }
            if c.width == 0 || c.height == 0 {
                errors.push(format!("camera {i}: resolution must be nonzero"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Invalid(errors))
        }
    }
}
