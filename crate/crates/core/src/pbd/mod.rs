//! Unified position-based dynamics: rigid bodies and Cosserat-rod
//! deformables under one substep loop with a Jacobi constraint solver.

mod accumulator;
pub mod constraint;
pub mod project;
mod state;
mod step;

pub use accumulator::DeltaAccumulator;
pub use constraint::{
    bend_twist_sign, compute_darboux, generalized_inverse_mass, solve_bend_twist,
    solve_rigid_contact, solve_rigid_particle_contact, solve_shear_stretch,
};
pub use project::{generic_project, Participant, ProjectionError};
pub use state::{
    CollisionSphere, ExternalForces, Particle, RigidBody, Rod, Segment, SimConfig, World,
};
pub use step::{predict_states, set_body_wrench, step, update_velocities};
