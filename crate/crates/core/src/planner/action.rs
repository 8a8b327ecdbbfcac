//! Push parameterization and planar goals.

use nalgebra::Vector2;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a - two_pi * (a / two_pi).round();
    if w <= -std::f64::consts::PI {
        w += two_pi;
    }
    w
}

/// One push: polar start position and planar Cartesian end position of the
/// end effector, both relative to the object center at planning time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PushAction {
    pub start_radius: f64,
    pub start_angle: f64,
    pub end_dx: f64,
    pub end_dy: f64,
}

impl PushAction {
    pub fn from_vec(v: &[f64; 4]) -> Self {
        Self {
            start_radius: v[0].abs().max(1e-4),
            start_angle: wrap_angle(v[1]),
            end_dx: v[2],
            end_dy: v[3],
        }
    }

    pub fn to_vec(&self) -> [f64; 4] {
        [self.start_radius, self.start_angle, self.end_dx, self.end_dy]
    }
}

/// Planar goal: target position and target yaw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoalPose {
    pub position: Vector2<f64>,
    pub yaw: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        for a in [-10.0, -3.5, 0.0, 3.5, 10.0, std::f64::consts::PI, -std::f64::consts::PI] {
            let w = wrap_angle(a);
            assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
            // same direction
            assert!((w.sin() - a.sin()).abs() < 1e-12);
            assert!((w.cos() - a.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn action_roundtrip_enforces_invariants() {
        let a = PushAction::from_vec(&[-0.1, 7.0, 0.02, -0.03]);
        assert!(a.start_radius > 0.0);
        assert!(a.start_angle > -std::f64::consts::PI && a.start_angle <= std::f64::consts::PI);
    }
}
