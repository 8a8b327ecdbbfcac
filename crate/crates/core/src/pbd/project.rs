//! Generic Lagrangian constraint projection.
//!
//! `λ = -(Σ_k ∇C W_k ∇Cᵀ)⁻¹ C(p)`, `Δp_i = W_i ∇Cᵀ λ`, for a constraint of
//! any dimension over participants of any state dimension (3 for positions
//! and angular states, 4 for raw quaternion states). Every specialized
//! solver in [`super::constraint`] is tested against this projection.

use nalgebra::{DMatrix, DVector};

use crate::math::{real, Real};

/// One state block participating in a constraint.
#[derive(Clone, Debug)]
pub struct Participant<T: Real> {
    /// Constraint gradient w.r.t. this block, `m x d`.
    pub gradient: DMatrix<T>,
    /// Inverse mass / inertia of this block, `d x d`.
    pub inv_mass: DMatrix<T>,
}

impl<T: Real> Participant<T> {
    /// Block with isotropic inverse mass `w` (particles, scalar rod inertia).
    pub fn isotropic(gradient: DMatrix<T>, w: T) -> Self {
        let d = gradient.ncols();
        Self { gradient, inv_mass: DMatrix::identity(d, d) * w }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProjectionError {
    /// The weighted Gram matrix is numerically singular: every participant
    /// is kinematic or the gradients are degenerate.
    #[error("singular constraint system (condition number above {0:.1e})")]
    SingularSystem(f64),
}

/// Condition-number limit above which the weighted Gram matrix is treated
/// as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Projects a constraint violation onto the state, returning one delta per
/// participant.
pub fn generic_project<T: Real>(
    c: &DVector<T>,
    participants: &[Participant<T>],
) -> Result<Vec<DVector<T>>, ProjectionError> {
    let m = c.len();
    let mut gram = DMatrix::<T>::zeros(m, m);
    for p in participants {
        debug_assert_eq!(p.gradient.nrows(), m);
        gram += &p.gradient * &p.inv_mass * p.gradient.transpose();
    }

    let svd = gram.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let min_sv = svd.singular_values.iter().fold(max_sv, |a, &b| a.min(b));
    if min_sv <= T::zero() || max_sv / min_sv > real::<T>(MAX_CONDITION) {
        return Err(ProjectionError::SingularSystem(MAX_CONDITION));
    }

    let lambda = svd.solve(&(-c), T::zero()).expect("svd solve");
    Ok(participants
        .iter()
        .map(|p| &p.inv_mass * p.gradient.transpose() * &lambda)
        .collect())
}
