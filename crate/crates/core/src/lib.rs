//! Desk-scale digital twin engine.
//!
//! The crate combines a unified position-based dynamics core (rigid bodies +
//! Cosserat rods), a deterministic software rasterizer for 3D Gaussians, a
//! photometric SE(3) correction loop, and a sampling-based push planner.
//! All numeric code is generic over the scalar type via [`math::Real`];
//! the aliases below fix `f64` as the working precision used by the scene
//! builder, the tracking harness, and the CLI.

pub mod collision;
pub mod corrector;
pub mod math;
pub mod pbd;
pub mod planner;
pub mod scene;
pub mod splat;
#[cfg(feature = "testkit")]
pub mod testkit;

/// Working-precision 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Working-precision 3x3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Working-precision unit quaternion.
pub type Quat = nalgebra::UnitQuaternion<f64>;
/// Working-precision rigid pose.
pub type Pose = math::Pose<f64>;
/// Working-precision simulation world.
pub type World = pbd::World<f64>;
/// Working-precision sim configuration.
pub type SimConfig = pbd::SimConfig<f64>;
/// Working-precision splat.
pub type Gaussian3D = splat::Gaussian3D<f64>;
/// Working-precision camera.
pub type Camera = splat::Camera<f64>;
/// Working-precision rendered image.
pub type RenderedImage = splat::RenderedImage<f64>;
