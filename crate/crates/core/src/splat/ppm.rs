//! Binary portable pixmap (P6, 8-bit) dumps for image inspection.
//!
//! Byte layout: the ASCII header `P6\n<width> <height>\n255\n` followed by
//! `width * height` RGB byte triples in row-major order, each channel
//! `round(clamp(v, 0, 1) * 255)`.

use std::io::Write;
use std::path::Path;

use crate::math::Real;

use super::render::RenderedImage;

pub fn write_ppm<T: Real>(img: &RenderedImage<T>, path: &Path) -> std::io::Result<()> {
    let mut out = Vec::with_capacity(32 + 3 * img.width * img.height);
    write!(out, "P6\n{} {}\n255\n", img.width, img.height)?;
    for v in &img.rgb {
        let f = v.to_f64().unwrap_or(0.0).clamp(0.0, 1.0);
        out.push((f * 255.0 + 0.5).floor() as u8);
    }
    std::fs::write(path, out)
}
