//! The visual correction half of the prediction-correction loop:
//! segmentation-masked photometric loss, SE(3) pose optimization, correction
//! wrenches, the tracking step, and evaluation metrics.

mod grad;
mod loss;
mod metrics;
mod optimize;
mod track;
mod transform;
mod wrench;

pub use grad::{apply_unit_transforms, loss_and_gradient, render_all, PoseGradient};
pub use loss::{photometric_loss, CorrectionError, Observation};
pub use metrics::{metrics, pose_errors, ObjectMetrics};
pub use optimize::{optimize_pose, CorrectionGains};
pub use track::{make_observation, track_step, CorrectionMode, FrameDiagnostics, Twin};
pub use transform::{CorrectionTransform, UnitTransform};
pub use wrench::{correction_wrench, ObjectWrench};
