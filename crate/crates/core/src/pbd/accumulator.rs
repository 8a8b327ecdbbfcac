//! Jacobi-style delta accumulation.
//!
//! Every solver iteration evaluates all constraints against the same state
//! snapshot and accumulates position / quaternion deltas here; `apply`
//! divides each entity's sum by its contribution count and writes the
//! averaged deltas back. Accumulation is plain summation, so contributions
//! commute up to floating-point associativity.

use nalgebra::{Quaternion, Vector3};

use crate::math::{apply_angular_delta, Real};

use super::state::World;

#[derive(Clone, Debug)]
struct Slot3<T: Real> {
    sum: Vector3<T>,
    count: u32,
}

impl<T: Real> Default for Slot3<T> {
    fn default() -> Self {
        Self { sum: Vector3::zeros(), count: 0 }
    }
}

#[derive(Clone, Debug)]
struct Slot4<T: Real> {
    sum: Quaternion<T>,
    count: u32,
}

impl<T: Real> Default for Slot4<T> {
    fn default() -> Self {
        Self { sum: Quaternion::from_parts(T::zero(), Vector3::zeros()), count: 0 }
    }
}

/// Per-entity delta sums for one solver iteration.
#[derive(Clone, Debug, Default)]
pub struct DeltaAccumulator<T: Real> {
    body_dx: Vec<Slot3<T>>,
    body_dq: Vec<Slot4<T>>,
    rod_dx: Vec<Vec<Slot3<T>>>,
    rod_dq: Vec<Vec<Slot4<T>>>,
}

impl<T: Real> DeltaAccumulator<T> {
    pub fn for_world(world: &World<T>) -> Self {
        Self {
            body_dx: vec![Slot3::default(); world.bodies.len()],
            body_dq: vec![Slot4::default(); world.bodies.len()],
            rod_dx: world.rods.iter().map(|r| vec![Slot3::default(); r.particles.len()]).collect(),
            rod_dq: world.rods.iter().map(|r| vec![Slot4::default(); r.segments.len()]).collect(),
        }
    }

    /// Zeroes all sums and counts (Algorithm 1 `ClearDeltas()`).
    pub fn clear(&mut self) {
        for s in &mut self.body_dx {
            *s = Slot3::default();
        }
        for s in &mut self.body_dq {
            *s = Slot4::default();
        }
        for rod in &mut self.rod_dx {
            for s in rod {
                *s = Slot3::default();
            }
        }
        for rod in &mut self.rod_dq {
            for s in rod {
                *s = Slot4::default();
            }
        }
    }

    pub fn add_body_dx(&mut self, body: usize, dx: Vector3<T>) {
        let s = &mut self.body_dx[body];
        s.sum += dx;
        s.count += 1;
    }

    pub fn add_body_dq(&mut self, body: usize, dq: Quaternion<T>) {
        let s = &mut self.body_dq[body];
        s.sum += dq;
        s.count += 1;
    }

    pub fn add_rod_dx(&mut self, rod: usize, particle: usize, dx: Vector3<T>) {
        let s = &mut self.rod_dx[rod][particle];
        s.sum += dx;
        s.count += 1;
    }

    pub fn add_rod_dq(&mut self, rod: usize, segment: usize, dq: Quaternion<T>) {
        let s = &mut self.rod_dq[rod][segment];
        s.sum += dq;
        s.count += 1;
    }

    /// Raw accumulated sums, used by the oracle tests.
    pub fn body_dx_sum(&self, body: usize) -> (Vector3<T>, u32) {
        (self.body_dx[body].sum, self.body_dx[body].count)
    }

    pub fn body_dq_sum(&self, body: usize) -> (Quaternion<T>, u32) {
        (self.body_dq[body].sum, self.body_dq[body].count)
    }

    pub fn rod_dx_sum(&self, rod: usize, particle: usize) -> (Vector3<T>, u32) {
        (self.rod_dx[rod][particle].sum, self.rod_dx[rod][particle].count)
    }

    pub fn rod_dq_sum(&self, rod: usize, segment: usize) -> (Quaternion<T>, u32) {
        (self.rod_dq[rod][segment].sum, self.rod_dq[rod][segment].count)
    }

    /// Applies count-averaged deltas to the world (Algorithm 1 `ApplyDeltas()`).
    pub fn apply(&self, world: &mut World<T>) {
        for (i, body) in world.bodies.iter_mut().enumerate() {
            let dx = &self.body_dx[i];
            if dx.count > 0 {
                body.position += dx.sum / T::from_u32(dx.count).unwrap();
            }
            let dq = &self.body_dq[i];
            if dq.count > 0 {
                let avg = dq.sum / T::from_u32(dq.count).unwrap();
                body.orientation = apply_angular_delta(&body.orientation, &avg);
            }
        }
        for (ri, rod) in world.rods.iter_mut().enumerate() {
            for (pi, p) in rod.particles.iter_mut().enumerate() {
                let dx = &self.rod_dx[ri][pi];
                if dx.count > 0 {
                    p.position += dx.sum / T::from_u32(dx.count).unwrap();
                }
            }
            for (si, s) in rod.segments.iter_mut().enumerate() {
                let dq = &self.rod_dq[ri][si];
                if dq.count > 0 {
                    let avg = dq.sum / T::from_u32(dq.count).unwrap();
                    s.orientation = apply_angular_delta(&s.orientation, &avg);
                }
            }
        }
    }
}
