//! Quaternion, rotation, and pose primitives shared by the whole engine.
//!
//! Conventions used everywhere:
//! - quaternions are stored scalar-last internally (nalgebra layout) and
//!   serialized as `(x, y, z, w)` in every external format;
//! - `q` and `-q` denote the same rotation (double cover), so all angle
//!   comparisons go through [`geodesic_angle`];
//! - every quaternion-modifying update renormalizes, because the PBD solver
//!   applies additive quaternion deltas that drift off the unit sphere.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

/// Scalar types the engine can run on (`f32`, `f64`).
pub trait Real: nalgebra::RealField + Copy + num_traits::FromPrimitive + num_traits::ToPrimitive {}
impl<T> Real for T where
    T: nalgebra::RealField + Copy + num_traits::FromPrimitive + num_traits::ToPrimitive
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

/// Rigid pose: position plus orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T: Real> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vector3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self { position, orientation }
    }

    pub fn identity() -> Self {
        Self { position: Vector3::zeros(), orientation: UnitQuaternion::identity() }
    }

    /// Maps a point from the pose's local frame into the world frame.
    #[inline]
    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        quat_rotate(&self.orientation, p) + self.position
    }

    /// Maps a world point into the pose's local frame.
    #[inline]
    pub fn inverse_transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        quat_rotate(&self.orientation.inverse(), &(p - self.position))
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose<T>) -> Pose<T> {
        Pose {
            position: self.transform_point(&other.position),
            orientation: quat_multiply(&self.orientation, &other.orientation),
        }
    }

    pub fn inverse(&self) -> Pose<T> {
        let inv_q = self.orientation.inverse();
        Pose {
            position: -quat_rotate(&inv_q, &self.position),
            orientation: inv_q,
        }
    }
}

/// Hamilton product of two near-unit quaternions, renormalized.
#[inline]
pub fn quat_multiply<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>) -> UnitQuaternion<T> {
    UnitQuaternion::new_normalize(a.quaternion() * b.quaternion())
}

/// Rotates a vector by a unit quaternion.
#[inline]
pub fn quat_rotate<T: Real>(q: &UnitQuaternion<T>, v: &Vector3<T>) -> Vector3<T> {
    q.transform_vector(v)
}

/// Additive quaternion update `normalize(q + dq)`.
///
/// Degenerate increments (`‖q + dq‖ < 1e-12`) leave `q` unchanged and emit a
/// recoverable warning.
pub fn apply_angular_delta<T: Real>(q: &UnitQuaternion<T>, dq: &Quaternion<T>) -> UnitQuaternion<T> {
    let sum = q.quaternion() + dq;
    if sum.norm() < real::<T>(1e-12) {
        log::warn!("degenerate quaternion increment; keeping previous orientation");
        return *q;
    }
    UnitQuaternion::new_normalize(sum)
}

/// Geodesic angle between two rotations, in `[0, π]`, invariant under the
/// sign flip of either argument.
///
/// Uses the atan2 form instead of `2 acos(|a·b|)`: acos is ill-conditioned
/// near identical rotations and cannot resolve angles below ~1e-8.
pub fn geodesic_angle<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>) -> T {
    let ca = a.quaternion().coords;
    let cb = b.quaternion().coords;
    let sb = if ca.dot(&cb) < T::zero() { -cb } else { cb };
    // cos(θ/2) = |a·b|  =>  θ = 4 atan2(‖a - b‖, ‖a + b‖)
    real::<T>(4.0) * (ca - sb).norm().atan2((ca + sb).norm())
}

/// Pure (imaginary) quaternion from a vector.
#[inline]
pub fn pure_quaternion<T: Real>(v: &Vector3<T>) -> Quaternion<T> {
    Quaternion::from_parts(T::zero(), *v)
}

/// Imaginary part of a quaternion.
#[inline]
pub fn imag<T: Real>(q: &Quaternion<T>) -> Vector3<T> {
    q.imag()
}

/// Exponential map: rotation vector (axis * angle) to unit quaternion.
pub fn quat_from_rotvec<T: Real>(w: &Vector3<T>) -> UnitQuaternion<T> {
    UnitQuaternion::from_scaled_axis(*w)
}

/// Logarithm map: unit quaternion to rotation vector with norm in `[0, π]`.
pub fn rotvec_from_quat<T: Real>(q: &UnitQuaternion<T>) -> Vector3<T> {
    q.scaled_axis()
}

/// Right Jacobian of SO(3) at rotation vector `w`.
///
/// Relates additive perturbations of the rotation-vector chart to body-frame
/// angular perturbations: `exp(w + dw) ≈ exp(w) exp(Jr(w) dw)`.
pub fn so3_right_jacobian<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let theta2 = w.norm_squared();
    let hat = skew(w);
    if theta2 < real::<T>(1e-12) {
        // series: I - 1/2 [w]x + 1/6 [w]x^2
        return Matrix3::identity() - hat * real::<T>(0.5) + hat * hat * real::<T>(1.0 / 6.0);
    }
    let theta = theta2.sqrt();
    let a = (T::one() - theta.cos()) / theta2;
    let b = (theta - theta.sin()) / (theta2 * theta);
    Matrix3::identity() - hat * a + hat * hat * b
}

/// Skew-symmetric cross-product matrix `[v]x`.
#[inline]
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(), -v.z, v.y,
        v.z, T::zero(), -v.x,
        -v.y, v.x, T::zero(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    type Q = UnitQuaternion<f64>;

    fn quat_xyzw(x: f64, y: f64, z: f64, w: f64) -> Q {
        UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z))
    }

    fn rot_z(angle: f64) -> Q {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle)
    }

    #[test]
    fn multiply_identity_and_inverse() {
        let q = quat_xyzw(0.1, -0.4, 0.2, 0.88);
        let id = Q::identity();
        assert_relative_eq!(
            quat_multiply(&id, &q).quaternion().coords,
            q.quaternion().coords,
            epsilon = 1e-12
        );
        let prod = quat_multiply(&q, &q.inverse());
        assert!(geodesic_angle(&prod, &id) < 1e-9);
    }

    #[test]
    fn multiply_composes_rotations() {
        // two 90° turns about z make 180° about z: (w=0, z=1) up to sign
        let half = rot_z(std::f64::consts::FRAC_PI_2);
        let full = quat_multiply(&half, &half);
        let expect = rot_z(std::f64::consts::PI);
        assert!(geodesic_angle(&full, &expect) < 1e-9);
        // cross-check against the composed rotation-matrix oracle
        let m = half.to_rotation_matrix() * half.to_rotation_matrix();
        let from_m = UnitQuaternion::from_rotation_matrix(&m);
        assert!(geodesic_angle(&full, &from_m) < 1e-9);
    }

    #[test]
    fn rotate_matches_rotation_matrix() {
        let q = rot_z(std::f64::consts::FRAC_PI_2);
        let v = Vector3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(quat_rotate(&q, &v), Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        let q2 = quat_xyzw(0.3, 0.1, -0.2, 0.9);
        let v2 = Vector3::new(0.2, -0.7, 1.3);
        assert_relative_eq!(quat_rotate(&q2, &v2), q2.to_rotation_matrix() * v2, epsilon = 1e-12);
        assert_eq!(quat_rotate(&q2, &Vector3::zeros()), Vector3::zeros());
    }

    #[test]
    fn rotate_preserves_norm() {
        let q = quat_xyzw(0.5, 0.5, 0.5, 0.5);
        let v = Vector3::new(3.0, -2.0, 0.25);
        assert_relative_eq!(quat_rotate(&q, &v).norm(), v.norm(), epsilon = 1e-9);
    }

    #[test]
    fn angular_delta_zero_increment() {
        let q = quat_xyzw(0.2, 0.3, -0.1, 0.92);
        let out = apply_angular_delta(&q, &Quaternion::new(0.0, 0.0, 0.0, 0.0));
        assert_relative_eq!(out.quaternion().coords, q.quaternion().coords, epsilon = 1e-12);
    }

    #[test]
    fn angular_delta_small_rotation_matches_exponential_map() {
        let theta = 1e-4;
        let id = Q::identity();
        // dq = 1/2 [(theta,0,0), 0] * q
        let dq = pure_quaternion(&Vector3::new(theta, 0.0, 0.0)) * id.quaternion() * 0.5;
        let out = apply_angular_delta(&id, &dq);
        let exact = UnitQuaternion::from_scaled_axis(Vector3::new(theta, 0.0, 0.0));
        // additive update agrees with the exponential map to O(theta^2)
        assert!(geodesic_angle(&out, &exact) < theta * theta);
    }

    #[test]
    fn angular_delta_degenerate_returns_input() {
        let q = quat_xyzw(0.0, 0.0, 0.6, 0.8);
        // dq = -q cancels the quaternion entirely: recoverable degeneracy
        let dq = q.quaternion() * -1.0;
        let out = apply_angular_delta(&q, &dq);
        assert_eq!(out.quaternion().coords, q.quaternion().coords);
        // dq = -2q lands on -q: the same rotation survives the update
        let out2 = apply_angular_delta(&q, &(q.quaternion() * -2.0));
        assert!(geodesic_angle(&out2, &q) < 1e-12);
    }

    #[test]
    fn geodesic_angle_basics() {
        let q = quat_xyzw(0.1, 0.2, 0.3, 0.95);
        assert_eq!(geodesic_angle(&q, &q), 0.0);
        let neg = UnitQuaternion::new_unchecked(-q.quaternion());
        assert!(geodesic_angle(&q, &neg) < 1e-12);
        let quarter = rot_z(std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(
            geodesic_angle(&Q::identity(), &quarter),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn right_jacobian_small_angle_is_near_identity() {
        let j = so3_right_jacobian(&Vector3::new(1e-9, 0.0, 0.0));
        assert_relative_eq!(j, Matrix3::identity(), epsilon = 1e-8);
    }

    #[test]
    fn right_jacobian_matches_finite_difference() {
        let w = Vector3::new(0.3, -0.5, 0.2);
        let jr = so3_right_jacobian(&w);
        let eps = 1e-6;
        for k in 0..3 {
            let mut dw = Vector3::zeros();
            dw[k] = eps;
            let a = quat_from_rotvec(&(w + dw));
            let b = quat_from_rotvec(&w);
            // exp(w+dw) ≈ exp(w) exp(Jr dw)
            let local = b.inverse() * a;
            let got = rotvec_from_quat(&local) / eps;
            let expect = jr.column(k).into_owned();
            assert_relative_eq!(got, expect, epsilon = 1e-5);
        }
    }

    #[test]
    fn generic_scalar_f32_smoke() {
        let q = UnitQuaternion::<f32>::from_axis_angle(&Vector3::z_axis(), 0.5f32);
        let v = Vector3::new(1.0f32, 0.0, 0.0);
        let r = quat_rotate(&q, &v);
        assert!((r.norm() - 1.0).abs() < 1e-6);
        let a = geodesic_angle(&q, &UnitQuaternion::identity());
        assert!((a - 0.5).abs() < 1e-6);
    }

    fn arb_unit_quat() -> impl Strategy<Value = Q> {
        (
            -1.0f64..1.0,
            -1.0f64..1.0,
            -1.0f64..1.0,
            -1.0f64..1.0,
        )
            .prop_filter_map("near-zero quaternion", |(x, y, z, w)| {
                let q = Quaternion::new(w, x, y, z);
                (q.norm() > 1e-3).then(|| UnitQuaternion::new_normalize(q))
            })
    }

    proptest! {
        #[test]
        fn prop_multiply_associative(a in arb_unit_quat(), b in arb_unit_quat(), c in arb_unit_quat()) {
            let left = quat_multiply(&quat_multiply(&a, &b), &c);
            let right = quat_multiply(&a, &quat_multiply(&b, &c));
            prop_assert!(geodesic_angle(&left, &right) < 1e-9);
        }

        #[test]
        fn prop_rotate_homomorphism(
            a in arb_unit_quat(),
            b in arb_unit_quat(),
            vx in -2.0f64..2.0, vy in -2.0f64..2.0, vz in -2.0f64..2.0,
        ) {
            let v = Vector3::new(vx, vy, vz);
            let lhs = quat_rotate(&quat_multiply(&a, &b), &v);
            let rhs = quat_rotate(&a, &quat_rotate(&b, &v));
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }

        #[test]
        fn prop_geodesic_is_a_metric(a in arb_unit_quat(), b in arb_unit_quat(), c in arb_unit_quat()) {
            // symmetry
            prop_assert!((geodesic_angle(&a, &b) - geodesic_angle(&b, &a)).abs() < 1e-12);
            // identity of indiscernibles (mod sign)
            prop_assert!(geodesic_angle(&a, &a) < 1e-12);
            // triangle inequality
            let ab = geodesic_angle(&a, &b);
            let bc = geodesic_angle(&b, &c);
            let ac = geodesic_angle(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn prop_sign_flip_invariance(a in arb_unit_quat(), b in arb_unit_quat()) {
            let neg_b = UnitQuaternion::new_unchecked(-b.quaternion());
            prop_assert!((geodesic_angle(&a, &b) - geodesic_angle(&a, &neg_b)).abs() < 1e-12);
        }

        #[test]
        fn prop_unit_norm_after_multiply(a in arb_unit_quat(), b in arb_unit_quat()) {
            let q = quat_multiply(&a, &b);
            prop_assert!((q.quaternion().norm() - 1.0).abs() < 1e-9);
        }
    }
}
