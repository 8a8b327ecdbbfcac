//! Deterministic software rasterizer: projection, depth sorting, and
//! front-to-back alpha blending with a 3-sigma footprint cutoff.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

use crate::math::{real, Real};

use super::camera::Camera;
use super::gaussian::Gaussian3D;

/// Row-major RGB buffer plus per-pixel accumulated alpha.
#[derive(Clone, Debug)]
pub struct RenderedImage<T: Real> {
    pub width: usize,
    pub height: usize,
    /// `3 * (y * width + x)` indexing.
    pub rgb: Vec<T>,
    pub alpha: Vec<T>,
}

impl<T: Real> RenderedImage<T> {
    pub fn constant(width: usize, height: usize, color: [T; 3]) -> Self {
        let mut rgb = Vec::with_capacity(3 * width * height);
        for _ in 0..width * height {
            rgb.extend_from_slice(&color);
        }
        Self { width, height, rgb, alpha: vec![T::zero(); width * height] }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Binary silhouette from accumulated alpha.
    pub fn silhouette(&self, threshold: T) -> Vec<bool> {
        self.alpha.iter().map(|a| *a > threshold).collect()
    }
}

/// Intersection-over-union of two binary masks of equal size.
pub fn mask_iou(a: &[bool], b: &[bool]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut inter = 0usize;
    let mut union = 0usize;
    for (x, y) in a.iter().zip(b) {
        if *x && *y {
            inter += 1;
        }
        if *x || *y {
            union += 1;
        }
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// A projected splat ready for rasterization.
#[derive(Clone, Debug)]
pub(crate) struct Splat2D<T: Real> {
    pub mean: Vector2<T>,
    pub inv_cov: Matrix2<T>,
    pub depth: T,
    pub alpha: T,
    pub color: [T; 3],
    /// Index into the source gaussian list.
    pub index: usize,
    /// Pixel bounding box, half-open.
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

/// Perspective projection of one splat: 2D mean (pixels), 2x2 covariance
/// (pixels^2) via the local affine approximation, and camera depth. `None`
/// when the depth is outside `[near, far]` or the truncated footprint
/// misses the image entirely.
pub fn project_gaussian<T: Real>(
    g: &Gaussian3D<T>,
    cam: &Camera<T>,
) -> Option<(Vector2<T>, Matrix2<T>, T)> {
    let p = cam.to_camera(&g.mean);
    if p.z <= cam.near || p.z >= cam.far {
        return None;
    }
    let mean2d = cam.project_cam(&p);
    let cov2d = projected_covariance(&g.covariance(), &p, cam);
    // truncation radius from the largest eigenvalue of the 2x2 covariance
    let half_tr = (cov2d[(0, 0)] + cov2d[(1, 1)]) * real::<T>(0.5);
    let det_part = ((cov2d[(0, 0)] - cov2d[(1, 1)]) * real::<T>(0.5)).powi(2)
        + cov2d[(0, 1)] * cov2d[(0, 1)];
    let lambda_max = half_tr + det_part.sqrt();
    let radius = real::<T>(5.0) * lambda_max.max(T::zero()).sqrt();
    let w = T::from_usize(cam.width).unwrap();
    let h = T::from_usize(cam.height).unwrap();
    if mean2d.x + radius < T::zero()
        || mean2d.x - radius > w
        || mean2d.y + radius < T::zero()
        || mean2d.y - radius > h
    {
        return None;
    }
    Some((mean2d, cov2d, p.z))
}

/// `Σ₂D = J R Σ Rᵀ Jᵀ` with the projection Jacobian at camera point `p`.
pub(crate) fn projected_covariance<T: Real>(
    cov_world: &Matrix3<T>,
    p_cam: &Vector3<T>,
    cam: &Camera<T>,
) -> Matrix2<T> {
    let r = cam.pose.orientation.to_rotation_matrix();
    let v = r.matrix() * cov_world * r.matrix().transpose();
    let j = projection_jacobian(p_cam, cam);
    let m = j * v * j.transpose();
    // symmetrize against rounding
    Matrix2::new(
        m[(0, 0)],
        (m[(0, 1)] + m[(1, 0)]) * real::<T>(0.5),
        (m[(0, 1)] + m[(1, 0)]) * real::<T>(0.5),
        m[(1, 1)],
    )
}

/// 2x3 Jacobian of the pinhole projection at camera-frame point `p`.
pub(crate) fn projection_jacobian<T: Real>(
    p: &Vector3<T>,
    cam: &Camera<T>,
) -> nalgebra::Matrix2x3<T> {
    let z_inv = T::one() / p.z;
    nalgebra::Matrix2x3::new(
        cam.fx * z_inv,
        T::zero(),
        -cam.fx * p.x * z_inv * z_inv,
        T::zero(),
        cam.fy * z_inv,
        -cam.fy * p.y * z_inv * z_inv,
    )
}

/// Projects, culls, and depth-sorts all splats (ties broken by index).
pub(crate) fn prepare_splats<T: Real>(
    gaussians: &[Gaussian3D<T>],
    cam: &Camera<T>,
) -> Vec<Splat2D<T>> {
    let mut splats: Vec<Splat2D<T>> = gaussians
        .iter()
        .enumerate()
        .filter_map(|(index, g)| {
            let (mean, cov, depth) = project_gaussian(g, cam)?;
            let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
            if det <= T::zero() {
                return None;
            }
            let inv_cov = Matrix2::new(cov[(1, 1)], -cov[(0, 1)], -cov[(1, 0)], cov[(0, 0)]) / det;
            let half_tr = (cov[(0, 0)] + cov[(1, 1)]) * real::<T>(0.5);
            let det_part = ((cov[(0, 0)] - cov[(1, 1)]) * real::<T>(0.5)).powi(2)
                + cov[(0, 1)] * cov[(0, 1)];
            let radius = real::<T>(5.0) * (half_tr + det_part.sqrt()).max(T::zero()).sqrt();
            let clampi = |v: T, hi: usize| -> usize {
                let f = v.floor().to_f64().unwrap_or(0.0).max(0.0);
                (f as usize).min(hi)
            };
            let x0 = clampi(mean.x - radius, cam.width);
            let y0 = clampi(mean.y - radius, cam.height);
            let x1 = clampi(mean.x + radius + T::one(), cam.width);
            let y1 = clampi(mean.y + radius + T::one(), cam.height);
            if x0 >= x1 || y0 >= y1 {
                return None;
            }
            Some(Splat2D {
                mean,
                inv_cov,
                depth,
                alpha: g.opacity,
                color: g.color,
                index,
                x0,
                x1,
                y0,
                y1,
            })
        })
        .collect();
    splats.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .expect("finite depths")
            .then(a.index.cmp(&b.index))
    });
    splats
}

const TILE: usize = 16;

/// Per-tile splat lists; indices stay in global depth order.
pub(crate) struct TileGrid {
    pub tiles_x: usize,
    pub lists: Vec<Vec<u32>>,
}

pub(crate) fn bin_splats<T: Real>(splats: &[Splat2D<T>], width: usize, height: usize) -> TileGrid {
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let mut lists = vec![Vec::new(); tiles_x * tiles_y];
    for (si, s) in splats.iter().enumerate() {
        let tx0 = s.x0 / TILE;
        let tx1 = (s.x1 - 1) / TILE;
        let ty0 = s.y0 / TILE;
        let ty1 = (s.y1 - 1) / TILE;
        for ty in ty0..=ty1.min(tiles_y - 1) {
            for tx in tx0..=tx1.min(tiles_x - 1) {
                lists[ty * tiles_x + tx].push(si as u32);
            }
        }
    }
    TileGrid { tiles_x, lists }
}

/// Renders splats over a uniform background by front-to-back compositing:
/// each splat contributes `α_i exp(-1/2 dᵀ Σ⁻¹ d)` and the remaining
/// transmittance multiplies the background.
///
/// Footprints are truncated at 5σ. A tighter cutoff leaves a visible
/// discontinuity at the footprint edge (`exp(-4.5) ≈ 1e-2` at 3σ) that
/// breaks the finite-difference validation of the correction gradient; at
/// 5σ the edge value is 4e-6 and the truncation is numerically invisible.
pub fn render<T: Real>(
    gaussians: &[Gaussian3D<T>],
    cam: &Camera<T>,
    background: [T; 3],
) -> RenderedImage<T> {
    let splats = prepare_splats(gaussians, cam);
    let grid = bin_splats(&splats, cam.width, cam.height);
    let width = cam.width;
    let height = cam.height;

    let mut rgb = vec![T::zero(); 3 * width * height];
    let mut alpha = vec![T::zero(); width * height];
    let half = real::<T>(0.5);
    let cutoff = real::<T>(12.5); // 5σ: d'Σ⁻¹d = 25

    rgb.par_chunks_mut(3 * width)
        .zip(alpha.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (row_rgb, row_alpha))| {
            let ty = y / TILE;
            let py = T::from_usize(y).unwrap() + half;
            for x in 0..width {
                let tile = &grid.lists[ty * grid.tiles_x + x / TILE];
                let px = T::from_usize(x).unwrap() + half;
                let mut transmittance = T::one();
                let mut c = [T::zero(); 3];
                for &si in tile {
                    let s = &splats[si as usize];
                    if x < s.x0 || x >= s.x1 || y < s.y0 || y >= s.y1 {
                        continue;
                    }
                    let d = Vector2::new(px - s.mean.x, py - s.mean.y);
                    let power = half * d.dot(&(s.inv_cov * d));
                    if power > cutoff {
                        continue;
                    }
                    let a_hat = s.alpha * (-power).exp();
                    let weight = a_hat * transmittance;
                    c[0] += s.color[0] * weight;
                    c[1] += s.color[1] * weight;
                    c[2] += s.color[2] * weight;
                    transmittance *= T::one() - a_hat;
                }
                row_rgb[3 * x] = c[0] + background[0] * transmittance;
                row_rgb[3 * x + 1] = c[1] + background[1] * transmittance;
                row_rgb[3 * x + 2] = c[2] + background[2] * transmittance;
                row_alpha[x] = T::one() - transmittance;
            }
        });

    RenderedImage { width, height, rgb, alpha }
}
