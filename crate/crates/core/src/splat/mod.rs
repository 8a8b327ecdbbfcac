//! Software rasterizer for 3D Gaussians: projection, depth sorting, and
//! front-to-back alpha blending, plus the rigid-transform machinery that
//! moves splats coherently with the simulation.

mod camera;
mod gaussian;
mod ppm;
mod render;

pub use camera::Camera;
pub use gaussian::{covariance, transform_gaussians, Anchor, Gaussian3D, SplatError};
pub use ppm::write_ppm;
pub use render::{mask_iou, project_gaussian, render, RenderedImage};

pub(crate) use render::{bin_splats, prepare_splats, projection_jacobian};
