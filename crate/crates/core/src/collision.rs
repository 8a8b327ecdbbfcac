//! Broad- and narrow-phase contact generation over sphere primitives.
//!
//! Every collidable is a sphere: rigid bodies carry sphere compounds, rod
//! particles are spheres. The broad phase is a uniform spatial hash; the
//! narrow phase emits [`ContactPair`] records ordered canonically so the
//! solver is deterministic.


use nalgebra::Vector3;

use crate::math::{real, Real};
use crate::pbd::World;

/// Infinite ground plane, `normal · p = offset` on the surface.
#[derive(Clone, Copy, Debug)]
pub struct GroundPlane<T: Real> {
    pub normal: Vector3<T>,
    pub offset: T,
}

impl<T: Real> GroundPlane<T> {
    pub fn new(normal: Vector3<T>, offset: T) -> Self {
        Self { normal: normal.normalize(), offset }
    }

    /// Horizontal plane through `z = offset`.
    pub fn horizontal(offset: T) -> Self {
        Self { normal: Vector3::new(T::zero(), T::zero(), T::one()), offset }
    }

    #[inline]
    pub fn signed_distance(&self, p: &Vector3<T>) -> T {
        self.normal.dot(p) - self.offset
    }
}

/// What the two sides of a contact are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ContactKind {
    RigidRigid,
    RigidParticle,
    ParticleParticle,
    EntityPlane,
}

/// Reference to one collidable entity in the world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityRef {
    /// The ground plane (always kinematic).
    Plane,
    /// Collision sphere `sphere` of rigid body `body`.
    Body { body: usize, sphere: usize },
    /// Centerline particle `particle` of rod `rod`.
    RodParticle { rod: usize, particle: usize },
}

/// One narrow-phase contact. The normal points from side `a` toward side
/// `b`; `point_a`/`point_b` are the world contact points on each surface and
/// `lever_a`/`lever_b` the arms from each center of mass, so
/// `point = com + lever` holds on both sides.
#[derive(Clone, Copy, Debug)]
pub struct ContactPair<T: Real> {
    pub kind: ContactKind,
    pub a: EntityRef,
    pub b: EntityRef,
    pub normal: Vector3<T>,
    pub point_a: Vector3<T>,
    pub point_b: Vector3<T>,
    pub lever_a: Vector3<T>,
    pub lever_b: Vector3<T>,
}

impl<T: Real> ContactPair<T> {
    /// Signed gap `n · (point_b - point_a)`; negative when penetrating.
    #[inline]
    pub fn gap(&self) -> T {
        self.normal.dot(&(self.point_b - self.point_a))
    }
}

/// A sphere instance flattened out of the world, with enough identity to
/// apply exclusion rules.
#[derive(Clone, Copy, Debug)]
struct SphereInst<T: Real> {
    entity: EntityRef,
    center: Vector3<T>,
    radius: T,
}

fn flatten_spheres<T: Real>(world: &World<T>) -> Vec<SphereInst<T>> {
    let mut out = Vec::new();
    for (bi, body) in world.bodies.iter().enumerate() {
        for si in 0..body.spheres.len() {
            let (center, radius) = body.world_sphere(si);
            out.push(SphereInst {
                entity: EntityRef::Body { body: bi, sphere: si },
                center,
                radius,
            });
        }
    }
    for (ri, rod) in world.rods.iter().enumerate() {
        for (pi, p) in rod.particles.iter().enumerate() {
            out.push(SphereInst {
                entity: EntityRef::RodParticle { rod: ri, particle: pi },
                center: p.position,
                radius: p.radius,
            });
        }
    }
    out
}

/// Adjacent particles along the same rod are bound by shear-stretch and do
/// not collide. (Same-body and same-collision-group exclusions are applied
/// at the group level.)
fn rod_adjacent(a: &EntityRef, b: &EntityRef) -> bool {
    match (a, b) {
        (
            EntityRef::RodParticle { rod: ra, particle: pa },
            EntityRef::RodParticle { rod: rb, particle: pb },
        ) => ra == rb && pa.abs_diff(*pb) <= 1,
        _ => false,
    }
}

/// Packs signed cell coordinates into one key (21 bits per axis).
#[inline]
fn cell_key(x: i64, y: i64, z: i64) -> u64 {
    const OFF: i64 = 1 << 20;
    (((x + OFF) as u64) << 42) | (((y + OFF) as u64) << 21) | ((z + OFF) as u64)
}

/// Spatial-hash broad phase: returns a superset of all overlapping index
/// pairs, each reported once with `i < j`.
///
/// Cell-centric sweep over sorted (cell, index) entries: within-cell pairs
/// plus the lexicographically forward half of the neighborhood, so every
/// cell pair is visited once. Runs once per substep, so it has to stay
/// allocation-light and cache-friendly.
pub fn broad_phase<T: Real>(spheres: &[(Vector3<T>, T)], cell_size: T) -> Vec<(usize, usize)> {
    assert!(cell_size > T::zero(), "cell_size must be positive");
    let n = spheres.len();
    if n == 0 {
        return Vec::new();
    }
    let coord = |v: T| -> i64 { (v / cell_size).floor().to_i64().unwrap_or(0) };
    let max_r = spheres.iter().map(|(_, r)| *r).fold(T::zero(), |a, b| a.max(b));
    // a pair within r_i + r_j <= 2 max_r spans at most `reach` cells per axis
    let reach = ((max_r + max_r) / cell_size)
        .ceil()
        .to_i64()
        .unwrap_or(1)
        .max(1);

    let mut entries: Vec<(u64, u32)> = spheres
        .iter()
        .enumerate()
        .map(|(i, (c, _))| (cell_key(coord(c.x), coord(c.y), coord(c.z)), i as u32))
        .collect();
    entries.sort_unstable();

    // runs of equal cell key
    let mut runs: Vec<(u64, u32, u32)> = Vec::new();
    let mut start = 0usize;
    for i in 1..=n {
        if i == n || entries[i].0 != entries[start].0 {
            runs.push((entries[start].0, start as u32, i as u32));
            start = i;
        }
    }

    // forward half of the neighborhood: (dx, dy, dz) > (0, 0, 0) lexicographically
    let mut offsets = Vec::new();
    for dx in 0..=reach {
        for dy in if dx == 0 { 0..=reach } else { -reach..=reach } {
            for dz in if dx == 0 && dy == 0 { 1..=reach } else { -reach..=reach } {
                offsets.push((dx, dy, dz));
            }
        }
    }

    let mut pairs = Vec::new();
    let mut push = |a: u32, b: u32| {
        let (a, b) = (a as usize, b as usize);
        pairs.push(if a < b { (a, b) } else { (b, a) });
    };
    for &(key, s, e) in &runs {
        let cell = &entries[s as usize..e as usize];
        for i in 0..cell.len() {
            for j in (i + 1)..cell.len() {
                push(cell[i].1, cell[j].1);
            }
        }
        let kz = (key & 0x1F_FFFF) as i64 - (1 << 20);
        let ky = ((key >> 21) & 0x1F_FFFF) as i64 - (1 << 20);
        let kx = ((key >> 42) & 0x1F_FFFF) as i64 - (1 << 20);
        for &(dx, dy, dz) in &offsets {
            let nk = cell_key(kx + dx, ky + dy, kz + dz);
            if let Ok(run_idx) = runs.binary_search_by_key(&nk, |r| r.0) {
                let (_, ns, ne) = runs[run_idx];
                for a in cell {
                    for b in &entries[ns as usize..ne as usize] {
                        push(a.1, b.1);
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn narrow_phase<T: Real>(
    a: &SphereInst<T>,
    b: &SphereInst<T>,
    margin: T,
) -> Option<ContactPair<T>> {
    let delta = b.center - a.center;
    let dist = delta.norm();
    if dist > a.radius + b.radius + margin {
        return None;
    }
    // coincident centers: deterministic fallback normal
    let normal = if dist < real::<T>(1e-12) {
        Vector3::new(T::zero(), T::zero(), T::one())
    } else {
        delta / dist
    };
    let point_a = a.center + normal * a.radius;
    let point_b = b.center - normal * b.radius;
    let kind = match (&a.entity, &b.entity) {
        (EntityRef::Body { .. }, EntityRef::Body { .. }) => ContactKind::RigidRigid,
        (EntityRef::RodParticle { .. }, EntityRef::RodParticle { .. }) => {
            ContactKind::ParticleParticle
        }
        _ => ContactKind::RigidParticle,
    };
    Some(ContactPair {
        kind,
        a: a.entity,
        b: b.entity,
        normal,
        point_a,
        point_b,
        lever_a: point_a - com_of(a),
        lever_b: point_b - com_of(b),
    })
}

/// Center of mass the lever arm is measured from. For rod particles the
/// particle itself is the mass carrier.
fn com_of<T: Real>(s: &SphereInst<T>) -> Vector3<T> {
    s.center
}

/// One collidable group (a body's sphere compound, or a rod's particles)
/// with its bounding box expanded by the margin.
struct Group<T: Real> {
    start: usize,
    end: usize,
    group_id: u32,
    is_rod: Option<usize>,
    min: Vector3<T>,
    max: Vector3<T>,
}

/// All active sphere-sphere and sphere-plane pairs within
/// `sum of radii + margin`, deduplicated and canonically ordered.
///
/// Sphere pairs are culled hierarchically: group (body / rod) bounding boxes
/// first, then sphere distances within overlapping group pairs. Output is
/// identical to the brute-force all-pairs narrow phase.
pub fn collect_collision_pairs<T: Real>(world: &World<T>, margin: T) -> Vec<ContactPair<T>> {
    assert!(margin >= T::zero());
    let spheres = flatten_spheres(world);

    // lever arms of body spheres are taken from the body's center of mass
    let body_coms: Vec<Vector3<T>> = world.bodies.iter().map(|b| b.position).collect();

    // group extents over the flattened sphere list (bodies first, rods after)
    let mut groups: Vec<Group<T>> = Vec::new();
    let mut cursor = 0usize;
    for (bi, body) in world.bodies.iter().enumerate() {
        let end = cursor + body.spheres.len();
        groups.push(bounded_group(&spheres, cursor, end, body.collision_group, None, margin));
        let _ = bi;
        cursor = end;
    }
    for (ri, rod) in world.rods.iter().enumerate() {
        let end = cursor + rod.particles.len();
        groups.push(bounded_group(&spheres, cursor, end, 0, Some(ri), margin));
        cursor = end;
    }

    let mut pairs = Vec::new();
    for gi in 0..groups.len() {
        // rod self-collision: non-adjacent particle pairs
        if groups[gi].is_rod.is_some() {
            let g = &groups[gi];
            for i in g.start..g.end {
                for j in (i + 1)..g.end {
                    if rod_adjacent(&spheres[i].entity, &spheres[j].entity) {
                        continue;
                    }
                    if let Some(pair) = narrow_phase(&spheres[i], &spheres[j], margin) {
                        pairs.push(pair);
                    }
                }
            }
        }
        for gj in (gi + 1)..groups.len() {
            let (a, b) = (&groups[gi], &groups[gj]);
            if a.group_id != 0 && a.group_id == b.group_id {
                continue;
            }
            if !boxes_overlap(a, b) {
                continue;
            }
            for i in a.start..a.end {
                for j in b.start..b.end {
                    if let Some(mut pair) = narrow_phase(&spheres[i], &spheres[j], margin) {
                        // canonical side order: bodies before rod particles,
                        // lower indices first
                        if spheres[j].entity < spheres[i].entity {
                            pair = narrow_phase(&spheres[j], &spheres[i], margin).unwrap();
                        }
                        if let EntityRef::Body { body, .. } = pair.a {
                            pair.lever_a = pair.point_a - body_coms[body];
                        }
                        if let EntityRef::Body { body, .. } = pair.b {
                            pair.lever_b = pair.point_b - body_coms[body];
                        }
                        pairs.push(pair);
                    }
                }
            }
        }
    }

    if let Some(plane) = &world.ground {
        for s in &spheres {
            let d = plane.signed_distance(&s.center);
            if d <= s.radius + margin {
                let point_b = s.center - plane.normal * s.radius;
                let point_a = s.center - plane.normal * d;
                let lever_b = match s.entity {
                    EntityRef::Body { body, .. } => point_b - body_coms[body],
                    _ => point_b - s.center,
                };
                pairs.push(ContactPair {
                    kind: ContactKind::EntityPlane,
                    a: EntityRef::Plane,
                    b: s.entity,
                    normal: plane.normal,
                    point_a,
                    point_b,
                    lever_a: Vector3::zeros(),
                    lever_b,
                });
            }
        }
    }

    pairs.sort_by(|x, y| (x.kind, x.a, x.b).cmp(&(y.kind, y.a, y.b)));
    pairs
}

fn bounded_group<T: Real>(
    spheres: &[SphereInst<T>],
    start: usize,
    end: usize,
    group_id: u32,
    is_rod: Option<usize>,
    margin: T,
) -> Group<T> {
    let big = T::max_value().unwrap();
    let mut min = Vector3::repeat(big);
    let mut max = Vector3::repeat(-big);
    for s in &spheres[start..end] {
        let half = margin * real::<T>(0.5);
        for k in 0..3 {
            min[k] = min[k].min(s.center[k] - s.radius - half);
            max[k] = max[k].max(s.center[k] + s.radius + half);
        }
    }
    Group { start, end, group_id, is_rod, min, max }
}

fn boxes_overlap<T: Real>(a: &Group<T>, b: &Group<T>) -> bool {
    a.min.x <= b.max.x
        && a.max.x >= b.min.x
        && a.min.y <= b.max.y
        && a.max.y >= b.min.y
        && a.min.z <= b.max.z
        && a.max.z >= b.min.z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Pose;
    use crate::pbd::{CollisionSphere, Particle, RigidBody, Rod, Segment};
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_sphere_body(name: &str, pos: Vector3<f64>, r: f64) -> RigidBody<f64> {
        RigidBody::new_dynamic(
            name,
            1.0,
            nalgebra::Matrix3::identity(),
            Pose::new(pos, UnitQuaternion::identity()),
            vec![CollisionSphere { offset: Vector3::zeros(), radius: r }],
        )
    }

    #[test]
    fn distant_spheres_no_pairs() {
        let mut world = World::new();
        world.bodies.push(single_sphere_body("a", Vector3::new(0.0, 0.0, 1.0), 0.005));
        world.bodies.push(single_sphere_body("b", Vector3::new(1.0, 0.0, 1.0), 0.005));
        assert!(collect_collision_pairs(&world, 5e-4).is_empty());
    }

    #[test]
    fn sphere_above_plane_pair() {
        let mut world = World::new();
        world.ground = Some(GroundPlane::horizontal(0.0));
        world.bodies.push(single_sphere_body("a", Vector3::new(0.0, 0.0, 0.004), 0.005));
        let pairs = collect_collision_pairs(&world, 5e-4);
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!(p.kind, ContactKind::EntityPlane);
        assert_eq!(p.normal, Vector3::new(0.0, 0.0, 1.0));
        // penetration of 1 mm reconstructible from the contact points
        assert!((p.gap() - (-0.001)).abs() < 1e-12);
    }

    #[test]
    fn coincident_centers_fallback_normal() {
        let mut world = World::new();
        world.bodies.push(single_sphere_body("a", Vector3::new(0.1, 0.2, 0.3), 0.005));
        world.bodies.push(single_sphere_body("b", Vector3::new(0.1, 0.2, 0.3), 0.005));
        let pairs = collect_collision_pairs(&world, 5e-4);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].normal, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn broad_phase_empty() {
        assert!(broad_phase::<f64>(&[], 0.01).is_empty());
    }

    #[test]
    fn broad_phase_superset_of_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spheres: Vec<(Vector3<f64>, f64)> = (0..500)
            .map(|_| {
                (
                    Vector3::new(
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(0.0..0.1),
                    ),
                    rng.gen_range(0.002..0.008),
                )
            })
            .collect();
        let candidates = broad_phase(&spheres, 0.016);
        let cand_set: std::collections::HashSet<_> = candidates.into_iter().collect();
        for i in 0..spheres.len() {
            for j in (i + 1)..spheres.len() {
                let touching = (spheres[i].0 - spheres[j].0).norm() <= spheres[i].1 + spheres[j].1;
                if touching {
                    assert!(cand_set.contains(&(i, j)), "missing overlap pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn same_cell_nonoverlapping_pass_broad_fail_narrow() {
        let spheres = vec![
            (Vector3::new(0.001, 0.001, 0.001), 0.0005),
            (Vector3::new(0.009, 0.009, 0.009), 0.0005),
        ];
        let candidates = broad_phase(&spheres, 0.02);
        assert_eq!(candidates, vec![(0, 1)]);

        let mut world = World::new();
        world.bodies.push(single_sphere_body("a", spheres[0].0, spheres[0].1));
        world.bodies.push(single_sphere_body("b", spheres[1].0, spheres[1].1));
        assert!(collect_collision_pairs(&world, 0.0).is_empty());
    }

    #[test]
    fn adjacent_rod_particles_excluded() {
        let mut world = World::new();
        let positions =
            [Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.009, 0.0, 0.0), Vector3::new(0.0185, 0.0, 0.0)];
        let particles: Vec<Particle<f64>> =
            positions.iter().map(|p| Particle::new(0.01, *p, 0.005)).collect();
        world.rods.push(Rod {
            name: "rope".into(),
            particles,
            segments: vec![
                Segment {
                    orientation: UnitQuaternion::identity(),
                    angular_velocity: Vector3::zeros(),
                    inv_mq: 1.0,
                    prev_orientation: UnitQuaternion::identity(),
                };
                2
            ],
            rest_lengths: vec![0.009, 0.0095],
            rest_darboux: vec![Vector3::zeros()],
            radius: 0.005,
        });
        // particles 0-1 and 1-2 overlap but are adjacent; 0-2 are 18.5 mm
        // apart with 10 mm combined radius, so nothing is emitted
        let pairs = collect_collision_pairs(&world, 5e-4);
        assert!(pairs.is_empty());
        // shrink the rod so 0-2 overlap: that pair must appear
        world.rods[0].particles[2].position = Vector3::new(0.0095, 0.0, 0.0);
        let pairs = collect_collision_pairs(&world, 5e-4);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].kind, ContactKind::ParticleParticle);
    }

    #[test]
    fn collision_group_suppresses_pairs() {
        let mut world = World::new();
        let mut a = single_sphere_body("link0", Vector3::zeros(), 0.01);
        let mut b = single_sphere_body("link1", Vector3::new(0.005, 0.0, 0.0), 0.01);
        a.collision_group = 3;
        b.collision_group = 3;
        world.bodies.push(a);
        world.bodies.push(b);
        assert!(collect_collision_pairs(&world, 5e-4).is_empty());
        world.bodies[1].collision_group = 4;
        assert_eq!(collect_collision_pairs(&world, 5e-4).len(), 1);
    }

    #[test]
    fn matches_bruteforce_on_random_scene() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut world = World::new();
        for i in 0..240 {
            world.bodies.push(single_sphere_body(
                &format!("s{i}"),
                Vector3::new(
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(0.0..0.05),
                ),
                rng.gen_range(0.003..0.008),
            ));
        }
        let margin = 5e-4;
        let pairs = collect_collision_pairs(&world, margin);

        let mut brute = Vec::new();
        for i in 0..world.bodies.len() {
            for j in (i + 1)..world.bodies.len() {
                let (ci, ri) = world.bodies[i].world_sphere(0);
                let (cj, rj) = world.bodies[j].world_sphere(0);
                if (ci - cj).norm() <= ri + rj + margin {
                    brute.push((i, j));
                }
            }
        }
        let got: Vec<(usize, usize)> = pairs
            .iter()
            .map(|p| match (p.a, p.b) {
                (EntityRef::Body { body: a, .. }, EntityRef::Body { body: b, .. }) => (a, b),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(got, brute);
        for p in &pairs {
            assert!((p.normal.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn swapped_world_order_gives_mirrored_pairs() {
        let mut world = World::new();
        world.bodies.push(single_sphere_body("a", Vector3::new(0.0, 0.0, 0.0), 0.006));
        world.bodies.push(single_sphere_body("b", Vector3::new(0.009, 0.0, 0.0), 0.006));
        let fwd = collect_collision_pairs(&world, 0.0);

        let mut swapped = World::new();
        swapped.bodies.push(single_sphere_body("b", Vector3::new(0.009, 0.0, 0.0), 0.006));
        swapped.bodies.push(single_sphere_body("a", Vector3::new(0.0, 0.0, 0.0), 0.006));
        let rev = collect_collision_pairs(&swapped, 0.0);

        assert_eq!(fwd.len(), 1);
        assert_eq!(rev.len(), 1);
        // same physical contact, normal negated, points swapped
        assert!((fwd[0].normal + rev[0].normal).norm() < 1e-9);
        assert!((fwd[0].point_a - rev[0].point_b).norm() < 1e-9);
        assert!((fwd[0].point_b - rev[0].point_a).norm() < 1e-9);
    }
}
