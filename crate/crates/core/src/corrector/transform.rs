//! SE(3) correction transforms: one per correction unit, parameterized as a
//! translation plus a rotation vector applied about the unit's pivot.

use nalgebra::Vector3;

use crate::math::{quat_from_rotvec, quat_rotate, real, Pose, Real};

/// One unit's correction: `T(μ) = R(rotation)(μ - pivot) + pivot + translation`.
///
/// Rotating about the unit's center keeps translation and rotation decoupled
/// near identity, the operating regime of per-frame correction.
#[derive(Clone, Copy, Debug)]
pub struct UnitTransform<T: Real> {
    pub translation: Vector3<T>,
    /// Rotation vector (axis * angle), wrapped to a norm below π.
    pub rotation: Vector3<T>,
    pub pivot: Vector3<T>,
}

impl<T: Real> UnitTransform<T> {
    pub fn identity(pivot: Vector3<T>) -> Self {
        Self { translation: Vector3::zeros(), rotation: Vector3::zeros(), pivot }
    }

    /// Re-wraps the rotation vector into `norm < π` (same rotation).
    pub fn wrap_rotation(&mut self) {
        let n = self.rotation.norm();
        let two_pi = real::<T>(2.0) * T::pi();
        if n >= T::pi() {
            let wrapped = n - two_pi * ((n + T::pi()) / two_pi).floor();
            self.rotation = self.rotation * (wrapped / n);
        }
    }

    /// The equivalent world-frame rigid map `μ ← R μ + t`.
    pub fn world_pose(&self) -> Pose<T> {
        let q = quat_from_rotvec(&self.rotation);
        let t = self.pivot + self.translation - quat_rotate(&q, &self.pivot);
        Pose::new(t, q)
    }

    pub fn apply(&self, p: &Vector3<T>) -> Vector3<T> {
        let q = quat_from_rotvec(&self.rotation);
        quat_rotate(&q, &(p - self.pivot)) + self.pivot + self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.translation == Vector3::zeros() && self.rotation == Vector3::zeros()
    }
}

/// The correction state of one tracked object: one SE(3) element per unit
/// (a single unit for rigid objects, one per segment for rods).
#[derive(Clone, Debug)]
pub struct CorrectionTransform<T: Real> {
    pub units: Vec<UnitTransform<T>>,
}

impl<T: Real> CorrectionTransform<T> {
    pub fn identity(pivots: &[Vector3<T>]) -> Self {
        Self { units: pivots.iter().map(|p| UnitTransform::identity(*p)).collect() }
    }
}
