//! 3D Gaussian primitives and their rigid transforms.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use crate::math::{quat_multiply, Pose, Real};

/// How a splat is tied to the physical scene: the index of its nearest
/// collision sphere (rod particle for DLOs), the owning motion frame, and
/// its offset/orientation inside that frame.
#[derive(Clone, Copy, Debug)]
pub struct Anchor<T: Real> {
    /// Nearest sphere (rigid bodies) or particle (rods) index.
    pub sphere: usize,
    /// Owning rod segment for DLO splats; unused (0) for rigid bodies.
    pub segment: usize,
    /// Offset in the motion frame (body frame / segment frame).
    pub local_offset: Vector3<T>,
    /// Orientation relative to the motion frame.
    pub local_orientation: UnitQuaternion<T>,
}

impl<T: Real> Anchor<T> {
    pub fn unanchored() -> Self {
        Self {
            sphere: 0,
            segment: 0,
            local_offset: Vector3::zeros(),
            local_orientation: UnitQuaternion::identity(),
        }
    }
}

/// One splat: mean, orientation, per-axis scale, opacity, RGB color, anchor.
#[derive(Clone, Copy, Debug)]
pub struct Gaussian3D<T: Real> {
    pub mean: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
    pub scale: Vector3<T>,
    pub opacity: T,
    pub color: [T; 3],
    pub anchor: Anchor<T>,
}

impl<T: Real> Gaussian3D<T> {
    /// World covariance `Σ = R S Sᵀ Rᵀ`.
    pub fn covariance(&self) -> Matrix3<T> {
        covariance(&self.orientation, &self.scale)
    }
}

/// `Σ = R S Sᵀ Rᵀ` for a rotation and per-axis scales.
pub fn covariance<T: Real>(orientation: &UnitQuaternion<T>, scale: &Vector3<T>) -> Matrix3<T> {
    let r = orientation.to_rotation_matrix();
    let s2 = Matrix3::from_diagonal(&Vector3::new(
        scale.x * scale.x,
        scale.y * scale.y,
        scale.z * scale.z,
    ));
    r.matrix() * s2 * r.matrix().transpose()
}

#[derive(Debug, thiserror::Error)]
pub enum SplatError {
    #[error("gaussian {gaussian} anchored to sphere {anchor} but only {available} transforms given")]
    MissingAnchorTransform { gaussian: usize, anchor: usize, available: usize },
}

/// Applies one rigid transform per anchor: `μ ← R μ + t`, `q ← q_T ⊗ q`.
/// Scales, opacities, colors, and the relative layout of co-anchored splats
/// are untouched.
pub fn transform_gaussians<T: Real>(
    gaussians: &[Gaussian3D<T>],
    transforms: &[Pose<T>],
) -> Result<Vec<Gaussian3D<T>>, SplatError> {
    gaussians
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let t = transforms.get(g.anchor.sphere).ok_or(SplatError::MissingAnchorTransform {
                gaussian: i,
                anchor: g.anchor.sphere,
                available: transforms.len(),
            })?;
            Ok(Gaussian3D {
                mean: t.transform_point(&g.mean),
                orientation: quat_multiply(&t.orientation, &g.orientation),
                ..*g
            })
        })
        .collect()
}
