//! Masked photometric loss between rendered and observed images.

use crate::math::Real;
use crate::splat::RenderedImage;

/// One synchronized multi-camera observation of a tracked object: RGB
/// images plus the object's binary segmentation mask per camera.
#[derive(Clone, Debug)]
pub struct Observation<T: Real> {
    pub images: Vec<RenderedImage<T>>,
    pub masks: Vec<Vec<bool>>,
    pub timestamp: T,
}

impl<T: Real> Observation<T> {
    /// True when no camera sees the object.
    pub fn fully_occluded(&self) -> bool {
        self.masks.iter().all(|m| m.iter().all(|b| !b))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorrectionError {
    /// No camera sees the object; the tracking step falls back to pure
    /// prediction.
    #[error("object mask is empty in every camera")]
    EmptyMask,
    #[error("observation has {got} cameras, expected {expected}")]
    CameraCountMismatch { got: usize, expected: usize },
}

/// Mean squared RGB error over mask-selected pixels, averaged over cameras
/// with nonempty masks.
pub fn photometric_loss<T: Real>(
    rendered: &[RenderedImage<T>],
    observed: &Observation<T>,
) -> Result<T, CorrectionError> {
    if rendered.len() != observed.images.len() {
        return Err(CorrectionError::CameraCountMismatch {
            got: observed.images.len(),
            expected: rendered.len(),
        });
    }
    let mut total = T::zero();
    let mut active = 0usize;
    for ((render, image), mask) in
        rendered.iter().zip(&observed.images).zip(&observed.masks)
    {
        assert_eq!(render.width, image.width, "resolution mismatch");
        assert_eq!(render.height, image.height, "resolution mismatch");
        assert_eq!(mask.len(), render.width * render.height, "mask resolution mismatch");
        let mut sum = T::zero();
        let mut count = 0usize;
        for (pix, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
            for ch in 0..3 {
                let d = render.rgb[3 * pix + ch] - image.rgb[3 * pix + ch];
                sum += d * d;
            }
            count += 1;
        }
        if count > 0 {
            total += sum / T::from_usize(3 * count).unwrap();
            active += 1;
        }
    }
    if active == 0 {
        return Err(CorrectionError::EmptyMask);
    }
    Ok(total / T::from_usize(active).unwrap())
}
