//! Closed-form occupancy shapes and color textures for synthetic objects.

use nalgebra::Vector3;

use crate::math::{real, Real};

/// Axis-aligned box part of a composite shape, in the object's local frame.
#[derive(Clone, Copy, Debug)]
pub struct BoxPart<T: Real> {
    pub center: Vector3<T>,
    pub extents: Vector3<T>,
}

impl<T: Real> BoxPart<T> {
    fn contains(&self, p: &Vector3<T>) -> bool {
        let d = p - self.center;
        let two = real::<T>(2.0);
        d.x.abs() <= self.extents.x / two
            && d.y.abs() <= self.extents.y / two
            && d.z.abs() <= self.extents.z / two
    }
}

/// Occupancy descriptor: a closed-form inside/outside test in the object's
/// local frame.
#[derive(Clone, Debug)]
pub enum Shape<T: Real> {
    /// Full extents (not half) along each axis, centered at the origin.
    Box { extents: Vector3<T> },
    /// Axis along local z, centered at the origin.
    Cylinder { radius: T, height: T },
    /// T-shape lying in the xy-plane: crossbar spans `y ∈ [0, bar.y]`,
    /// stem spans `y ∈ [-stem.y, 0]`, both centered in x and z.
    Tee { bar: Vector3<T>, stem: Vector3<T> },
    /// Union of boxes.
    Boxes(Vec<BoxPart<T>>),
}

impl<T: Real> Shape<T> {
    pub fn contains(&self, p: &Vector3<T>) -> bool {
        let two = real::<T>(2.0);
        match self {
            Shape::Box { extents } => {
                p.x.abs() <= extents.x / two
                    && p.y.abs() <= extents.y / two
                    && p.z.abs() <= extents.z / two
            }
            Shape::Cylinder { radius, height } => {
                p.x * p.x + p.y * p.y <= *radius * *radius && p.z.abs() <= *height / two
            }
            Shape::Tee { .. } => self.tee_parts().iter().any(|b| b.contains(p)),
            Shape::Boxes(parts) => parts.iter().any(|b| b.contains(p)),
        }
    }

    fn tee_parts(&self) -> Vec<BoxPart<T>> {
        let two = real::<T>(2.0);
        match self {
            Shape::Tee { bar, stem } => vec![
                BoxPart {
                    center: Vector3::new(T::zero(), bar.y / two, T::zero()),
                    extents: *bar,
                },
                BoxPart {
                    center: Vector3::new(T::zero(), -stem.y / two, T::zero()),
                    extents: *stem,
                },
            ],
            _ => unreachable!(),
        }
    }

    /// Local-frame bounding box (min, max).
    pub fn bbox(&self) -> (Vector3<T>, Vector3<T>) {
        let two = real::<T>(2.0);
        match self {
            Shape::Box { extents } => (-extents / two, extents / two),
            Shape::Cylinder { radius, height } => (
                Vector3::new(-*radius, -*radius, -*height / two),
                Vector3::new(*radius, *radius, *height / two),
            ),
            Shape::Tee { .. } => boxes_bbox(&self.tee_parts()),
            Shape::Boxes(parts) => boxes_bbox(parts),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let pos = |v: &Vector3<T>| v.x > T::zero() && v.y > T::zero() && v.z > T::zero();
        let ok = match self {
            Shape::Box { extents } => pos(extents),
            Shape::Cylinder { radius, height } => *radius > T::zero() && *height > T::zero(),
            Shape::Tee { bar, stem } => pos(bar) && pos(stem),
            Shape::Boxes(parts) => !parts.is_empty() && parts.iter().all(|b| pos(&b.extents)),
        };
        if ok {
            Ok(())
        } else {
            Err("shape extents must be positive".into())
        }
    }
}

fn boxes_bbox<T: Real>(parts: &[BoxPart<T>]) -> (Vector3<T>, Vector3<T>) {
    let two = real::<T>(2.0);
    let mut min = Vector3::repeat(T::max_value().unwrap());
    let mut max = -min;
    for b in parts {
        for k in 0..3 {
            min[k] = min[k].min(b.center[k] - b.extents[k] / two);
            max[k] = max[k].max(b.center[k] + b.extents[k] / two);
        }
    }
    (min, max)
}

/// Color source for splat seeding, evaluated in the object's local frame.
#[derive(Clone, Debug)]
pub enum Texture {
    Solid { color: [f64; 3] },
    Checker { a: [f64; 3], b: [f64; 3], cell: f64 },
    /// One random palette color per sphere.
    Palette { colors: Vec<[f64; 3]> },
}

impl Texture {
    /// Color at a local point; `sphere_color` carries the per-sphere palette
    /// pick when applicable.
    pub fn sample(&self, p: &Vector3<f64>, sphere_color: Option<[f64; 3]>) -> [f64; 3] {
        match self {
            Texture::Solid { color } => *color,
            Texture::Checker { a, b, cell } => {
                let idx = (p.x / cell).floor() + (p.y / cell).floor() + (p.z / cell).floor();
                if (idx as i64).rem_euclid(2) == 0 {
                    *a
                } else {
                    *b
                }
            }
            Texture::Palette { colors } => sphere_color.unwrap_or(colors[0]),
        }
    }
}
