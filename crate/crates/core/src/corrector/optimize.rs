//! Adam optimization of the correction transform against the photometric
//! loss (a fixed small number of steps per frame).

use nalgebra::Vector3;

use crate::splat::{Camera, Gaussian3D};

use super::grad::loss_and_gradient;
use super::loss::{CorrectionError, Observation};
use super::transform::CorrectionTransform;

/// Gains of the correction loop.
#[derive(Clone, Copy, Debug)]
pub struct CorrectionGains {
    /// Force gain, newtons per meter of mean splat displacement.
    pub k_p: f64,
    /// Adam step size for the translation coordinates.
    pub adam_lr_translation: f64,
    /// Adam step size for the rotation coordinates.
    pub adam_lr_rotation: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Adam steps per frame.
    pub steps: usize,
    /// Fraction of correction-step velocity kept after the correction PBD
    /// step (1 = spec-literal full dynamics; lower values discard the
    /// momentum injected by the wrench and stabilize high gains).
    pub velocity_blend: f64,
}

impl Default for CorrectionGains {
    fn default() -> Self {
        Self {
            k_p: 50.0,
            adam_lr_translation: 1e-3,
            adam_lr_rotation: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            steps: 6,
            velocity_blend: 1.0,
        }
    }
}

/// Runs the configured number of Adam steps on the per-unit SE(3)
/// parameters, returning the best transform seen (never worse than
/// identity).
pub fn optimize_pose(
    pivots: &[Vector3<f64>],
    base: &[Gaussian3D<f64>],
    unit_of: &[usize],
    cameras: &[Camera<f64>],
    observation: &Observation<f64>,
    background: [f64; 3],
    gains: &CorrectionGains,
) -> Result<(CorrectionTransform<f64>, f64, f64), CorrectionError> {
    let n = pivots.len();
    let mut current = CorrectionTransform::identity(pivots);
    let mut m = vec![[0.0f64; 6]; n];
    let mut v = vec![[0.0f64; 6]; n];
    let eps = 1e-8;

    let (loss0, mut grads) =
        loss_and_gradient(&current, base, unit_of, cameras, observation, background)?;
    let mut best = (current.clone(), loss0);

    for step in 1..=gains.steps {
        // adam update from the gradient at the current iterate
        let t = step as f64;
        let bias1 = 1.0 - gains.beta1.powf(t);
        let bias2 = 1.0 - gains.beta2.powf(t);
        for (ui, g) in grads.iter().enumerate() {
            let coords = [
                g.d_translation.x,
                g.d_translation.y,
                g.d_translation.z,
                g.d_rotation.x,
                g.d_rotation.y,
                g.d_rotation.z,
            ];
            for k in 0..6 {
                m[ui][k] = gains.beta1 * m[ui][k] + (1.0 - gains.beta1) * coords[k];
                v[ui][k] = gains.beta2 * v[ui][k] + (1.0 - gains.beta2) * coords[k] * coords[k];
                let m_hat = m[ui][k] / bias1;
                let v_hat = v[ui][k] / bias2;
                let lr = if k < 3 { gains.adam_lr_translation } else { gains.adam_lr_rotation };
                let delta = lr * m_hat / (v_hat.sqrt() + eps);
                if k < 3 {
                    current.units[ui].translation[k] -= delta;
                } else {
                    current.units[ui].rotation[k - 3] -= delta;
                }
            }
            current.units[ui].wrap_rotation();
        }

        if step < gains.steps {
            let (loss, g) =
                loss_and_gradient(&current, base, unit_of, cameras, observation, background)?;
            if loss < best.1 {
                best = (current.clone(), loss);
            }
            grads = g;
        } else {
            // final iterate: loss only
            let gaussians = super::grad::apply_unit_transforms(&current, base, unit_of);
            let rendered = super::grad::render_all(&gaussians, cameras, background);
            let loss = super::loss::photometric_loss(&rendered, observation)?;
            if loss < best.1 {
                best = (current.clone(), loss);
            }
        }
    }

    let (transform, best_loss) = best;
    Ok((transform, loss0, best_loss))
}
