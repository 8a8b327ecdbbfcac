//! Pinhole camera: intrinsics plus a world-to-camera pose.
//!
//! Camera frame convention: +z looks forward, +x right, +y down, matching
//! the pixel layout (u right, v down). Pixel `(i, j)` covers the unit square
//! centered at `(i + 0.5, j + 0.5)`.

use nalgebra::{Matrix3, UnitQuaternion, Vector2, Vector3};

use crate::math::{Pose, Real};

#[derive(Clone, Copy, Debug)]
pub struct Camera<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
    pub near: T,
    pub far: T,
    /// World-to-camera rigid map.
    pub pose: Pose<T>,
}

impl<T: Real> Camera<T> {
    /// Camera at `eye` looking at `target`, with vertical field of view
    /// `fov_y` (radians) and square pixels.
    pub fn look_at(
        eye: Vector3<T>,
        target: Vector3<T>,
        up: Vector3<T>,
        fov_y: T,
        width: usize,
        height: usize,
        near: T,
        far: T,
    ) -> Self {
        let two = T::one() + T::one();
        let z = (target - eye).normalize();
        let x = z.cross(&up).normalize();
        let y = z.cross(&x);
        // rows of the world-to-camera rotation
        let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let orientation = UnitQuaternion::from_matrix(&r);
        let position = -(r * eye);
        let fy = T::from_usize(height).unwrap() / two / (fov_y / two).tan();
        Self {
            fx: fy,
            fy,
            cx: T::from_usize(width).unwrap() / two,
            cy: T::from_usize(height).unwrap() / two,
            width,
            height,
            near,
            far,
            pose: Pose::new(position, orientation),
        }
    }

    /// World point into the camera frame.
    #[inline]
    pub fn to_camera(&self, p: &Vector3<T>) -> Vector3<T> {
        self.pose.transform_point(p)
    }

    /// Perspective projection of a camera-frame point to pixel coordinates.
    #[inline]
    pub fn project_cam(&self, p: &Vector3<T>) -> Vector2<T> {
        Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn look_at_centers_target() {
        let cam: Camera<f64> = Camera::look_at(
            Vector3::new(0.4, 0.2, 0.5),
            Vector3::new(0.0, 0.0, 0.02),
            Vector3::z(),
            0.8,
            160,
            120,
            0.05,
            2.0,
        );
        let target_cam = cam.to_camera(&Vector3::new(0.0, 0.0, 0.02));
        assert!(target_cam.z > 0.0);
        let px = cam.project_cam(&target_cam);
        assert_relative_eq!(px.x, 80.0, epsilon = 1e-9);
        assert_relative_eq!(px.y, 60.0, epsilon = 1e-9);
    }

    #[test]
    fn projection_scales_with_depth() {
        let cam: Camera<f64> = Camera::look_at(
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::zeros(),
            Vector3::y(),
            0.9,
            100,
            100,
            0.01,
            10.0,
        );
        // a point off-axis: twice the depth, half the pixel offset
        let p1 = cam.project_cam(&Vector3::new(0.1, 0.0, 0.5));
        let p2 = cam.project_cam(&Vector3::new(0.1, 0.0, 1.0));
        assert_relative_eq!((p1.x - 50.0) / (p2.x - 50.0), 2.0, epsilon = 1e-12);
    }
}
