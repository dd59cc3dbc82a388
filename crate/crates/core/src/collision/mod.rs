//! Hard spherocylinder collisions.
//!
//! Each molecule is a spherocylinder: a segment of half-length `L` along the director,
//! swept by a sphere of radius `r`. A binary collision is a smooth (frictionless)
//! elastic impulse along the contact normal, which conserves particle number, linear
//! momentum, angular momentum and kinetic energy.

mod dsmc;
pub mod geometry;

pub use dsmc::{dsmc_step, CollisionRecord, Dsmc, DsmcStepReport};

use crate::rigidbody::{director_from_angles, Kinematics};
use crate::{Error, EulerAngles, MoleculeSpec, Result, RigidState, Vec3};
use rand::Rng;
use std::f64::consts::TAU;

/// Slack on the surface separation accepted as touching.
pub const CONTACT_TOL: f64 = 1e-9;

/// Position and symmetry axis of a molecule.
pub trait Pose {
    fn position(&self) -> Vec3;
    fn axis(&self) -> Vec3;
}

impl Pose for RigidState {
    fn position(&self) -> Vec3 {
        self.q
    }
    fn axis(&self) -> Vec3 {
        self.director()
    }
}

impl Pose for Kinematics {
    fn position(&self) -> Vec3 {
        self.q
    }
    fn axis(&self) -> Vec3 {
        self.director()
    }
}

/// Geometry of a touching pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Contact point, midway along the closest-approach segment.
    pub zeta: Vec3,
    /// Unit normal pointing from body 1 towards body 2.
    pub k: Vec3,
    /// Lever arm `ζ − q1`.
    pub g1: Vec3,
    /// Lever arm `ζ − q2`.
    pub g2: Vec3,
    /// Surface separation; negative when overlapping.
    pub depth: f64,
}

/// Result of resolving one collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionOutcome {
    pub post1: RigidState,
    pub post2: RigidState,
    /// Impulse received by body 2 (body 1 receives the opposite).
    pub impulse: Vec3,
    /// Relative changes in particle number, linear momentum, angular momentum and
    /// kinetic energy.
    pub invariant_residuals: [f64; 4],
}

/// Contact between two spherocylinders, if their surfaces are within [`CONTACT_TOL`].
pub fn detect_contact<P: Pose>(s1: &P, s2: &P, spec: &MoleculeSpec) -> Option<Contact> {
    detect_contact_with_tol(s1, s2, spec, CONTACT_TOL)
}

pub fn detect_contact_with_tol<P: Pose>(
    s1: &P,
    s2: &P,
    spec: &MoleculeSpec,
    tol: f64,
) -> Option<Contact> {
    let contact = contact_geometry(&s1.position(), &s1.axis(), &s2.position(), &s2.axis(), spec);
    (contact.depth <= tol).then_some(contact)
}

/// Closest-approach geometry of two rods regardless of separation.
pub fn contact_geometry(q1: &Vec3, n1: &Vec3, q2: &Vec3, n2: &Vec3, spec: &MoleculeSpec) -> Contact {
    let half = spec.rod_halflength;
    let (c1, c2) = geometry::closest_points(
        &(q1 - half * n1),
        &(2.0 * half * n1),
        &(q2 - half * n2),
        &(2.0 * half * n2),
    );
    let sep = c2 - c1;
    let dist = sep.norm();
    let k = if dist > 0.0 {
        sep / dist
    } else {
        fallback_normal(q1, n1, q2, n2)
    };
    let zeta = 0.5 * (c1 + c2);
    Contact {
        zeta,
        k,
        g1: zeta - q1,
        g2: zeta - q2,
        depth: dist - 2.0 * spec.rod_radius,
    }
}

/// Normal for intersecting axes: perpendicular to both, oriented from body 1 to body 2.
fn fallback_normal(q1: &Vec3, n1: &Vec3, q2: &Vec3, n2: &Vec3) -> Vec3 {
    let d = q2 - q1;
    let mut k = n1.cross(n2);
    if k.norm() < 1e-12 {
        k = d - n1 * n1.dot(&d);
    }
    if k.norm() < 1e-12 {
        k = n1.cross(&Vec3::x());
        if k.norm() < 1e-12 {
            k = n1.cross(&Vec3::y());
        }
    }
    let k = k.normalize();
    if k.dot(&d) < 0.0 {
        -k
    } else {
        k
    }
}

/// Relative velocity of the contact point, `v1 − v2 + ω1×g1 − ω2×g2`.
///
/// The bodies approach when the result has a positive component along `k`.
pub fn relative_contact_velocity(k1: &Kinematics, k2: &Kinematics, contact: &Contact) -> Vec3 {
    k1.v - k2.v + k1.omega.cross(&contact.g1) - k2.omega.cross(&contact.g2)
}

/// Scalar inverse effective mass along `k` at the contact.
pub fn effective_inverse_mass(k1: &Kinematics, k2: &Kinematics, contact: &Contact, spec: &MoleculeSpec) -> f64 {
    let a1 = contact.g1.cross(&contact.k);
    let a2 = contact.g2.cross(&contact.k);
    2.0 / spec.m
        + a1.dot(&(k1.lab_inverse_inertia(spec) * a1))
        + a2.dot(&(k2.lab_inverse_inertia(spec) * a2))
}

/// Applies the elastic normal impulse to lab-frame kinematics.
///
/// Returns the post-collision kinematics and the impulse magnitude `J`; body 1 receives
/// `−J k` and body 2 receives `+J k` at the contact point.
pub fn resolve_kinematics(
    k1: &Kinematics,
    k2: &Kinematics,
    contact: &Contact,
    spec: &MoleculeSpec,
) -> Result<(Kinematics, Kinematics, f64)> {
    let g = relative_contact_velocity(k1, k2, contact);
    let gn = g.dot(&contact.k);
    if gn <= 0.0 {
        return Err(Error::Receding { normal_velocity: gn });
    }
    let inv_mass = effective_inverse_mass(k1, k2, contact, spec);
    if !(inv_mass > 0.0 && inv_mass.is_finite()) {
        return Err(Error::SingularEffectiveMass { value: inv_mass });
    }
    let j = 2.0 * gn / inv_mass;
    let imp = j * contact.k;
    let mut a = *k1;
    let mut b = *k2;
    a.v -= imp / spec.m;
    b.v += imp / spec.m;
    a.omega -= k1.lab_inverse_inertia(spec) * contact.g1.cross(&imp);
    b.omega += k2.lab_inverse_inertia(spec) * contact.g2.cross(&imp);
    Ok((a, b, j))
}

/// Totals of the four collision invariants over a set of bodies:
/// `[count, |Σp|-vector, Σ(q×p + 𝕀ω), Σ energy]` with magnitudes for scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTotals {
    pub count: f64,
    pub momentum: Vec3,
    pub angular_momentum: Vec3,
    pub energy: f64,
    /// Sums of magnitudes of the individual terms, used to form relative residuals.
    pub momentum_scale: f64,
    pub angular_scale: f64,
}

impl InvariantTotals {
    pub fn of<'a>(bodies: impl IntoIterator<Item = &'a Kinematics>, spec: &MoleculeSpec) -> Self {
        let mut t = Self {
            count: 0.0,
            momentum: Vec3::zeros(),
            angular_momentum: Vec3::zeros(),
            energy: 0.0,
            momentum_scale: 0.0,
            angular_scale: 0.0,
        };
        for k in bodies {
            let p = spec.m * k.v;
            let orbital = k.q.cross(&p);
            let spin = k.angular_momentum(spec);
            t.count += 1.0;
            t.momentum += p;
            t.angular_momentum += orbital + spin;
            t.energy += k.kinetic_energy(spec);
            t.momentum_scale += p.norm();
            t.angular_scale += orbital.norm() + spin.norm();
        }
        t
    }

    /// Relative residuals of `after` with respect to `self`.
    pub fn residuals(&self, after: &Self) -> [f64; 4] {
        let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { d };
        [
            (after.count - self.count).abs(),
            rel(
                (after.momentum - self.momentum).norm(),
                self.momentum_scale.max(after.momentum_scale),
            ),
            rel(
                (after.angular_momentum - self.angular_momentum).norm(),
                self.angular_scale.max(after.angular_scale),
            ),
            rel((after.energy - self.energy).abs(), self.energy.abs()),
        ]
    }
}

/// Resolves an approaching contact between two molecules.
///
/// Residuals are evaluated on the returned phase points, so they include the round
/// trip through the Euler-angle momenta.
pub fn resolve_collision(
    s1: &RigidState,
    s2: &RigidState,
    contact: &Contact,
    spec: &MoleculeSpec,
) -> Result<CollisionOutcome> {
    let k1 = s1.kinematics(spec)?;
    let k2 = s2.kinematics(spec)?;
    let (a, b, j) = resolve_kinematics(&k1, &k2, contact, spec)?;
    let post1 = RigidState::from_velocities(s1.q, s1.alpha, a.v, a.omega, spec);
    let post2 = RigidState::from_velocities(s2.q, s2.alpha, b.v, b.omega, spec);
    let before = InvariantTotals::of([&k1, &k2], spec);
    let after = InvariantTotals::of([&post1.kinematics(spec)?, &post2.kinematics(spec)?], spec);
    Ok(CollisionOutcome {
        post1,
        post2,
        impulse: j * contact.k,
        invariant_residuals: before.residuals(&after),
    })
}

/// Draws a random touching, approaching pair: uniform orientations, positions in a
/// box of side 10 and velocity components uniform in `[-scale/2, scale/2]`.
///
/// Rejection sampling: pairs that hit the gimbal chart or recede are redrawn.
pub fn sample_approaching_pair<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &MoleculeSpec,
    scale: f64,
) -> (RigidState, RigidState, Contact) {
    let angles = |rng: &mut R| {
        EulerAngles::new(
            rng.random::<f64>() * TAU,
            (1.0 - 2.0 * rng.random::<f64>()).acos(),
            rng.random::<f64>() * TAU,
        )
    };
    let uniform = |rng: &mut R, sc: f64| {
        Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * sc
    };
    loop {
        let (a1, a2) = (angles(rng), angles(rng));
        let q1 = uniform(rng, 10.0);
        let n1 = director_from_angles(&a1);
        let n2 = director_from_angles(&a2);
        let u = uniform(rng, 2.0);
        if u.norm() < 1e-3 {
            continue;
        }
        let u = u.normalize();
        let mut lo = 0.0;
        let mut hi = spec.bounding_diameter();
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if contact_geometry(&q1, &n1, &(q1 + mid * u), &n2, spec).depth < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s1 = RigidState::from_velocities(q1, a1, uniform(rng, scale), uniform(rng, scale), spec);
        let s2 = RigidState::from_velocities(q1 + hi * u, a2, uniform(rng, scale), uniform(rng, scale), spec);
        let (Ok(k1), Ok(k2)) = (s1.kinematics(spec), s2.kinematics(spec)) else { continue };
        let Some(c) = detect_contact(&s1, &s2, spec) else { continue };
        if relative_contact_velocity(&k1, &k2, &c).dot(&c.k) > 1e-3 * scale {
            return (s1, s2, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat3;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rod() -> MoleculeSpec {
        MoleculeSpec {
            i1: 1.0,
            i2: 1.0,
            i3: 0.2,
            rod_halflength: 0.5,
            rod_radius: 0.1,
            ..MoleculeSpec::default()
        }
    }

    fn body(q: Vec3, axis_angles: EulerAngles, v: Vec3, w: Vec3) -> Kinematics {
        Kinematics {
            q,
            v,
            omega: w,
            rotation: axis_angles.rotation(),
        }
    }

    #[test]
    fn distant_parallel_rods_do_not_touch() {
        let s = rod();
        let a = body(Vec3::zeros(), EulerAngles::new(0.0, 0.0, 0.0), Vec3::zeros(), Vec3::zeros());
        let b = body(Vec3::new(2.0, 0.0, 0.0), EulerAngles::new(0.0, 0.0, 0.0), Vec3::zeros(), Vec3::zeros());
        assert!(detect_contact(&a, &b, &s).is_none());
    }

    #[test]
    fn touching_spheres() {
        let s = MoleculeSpec::sphere(1.0, 0.5);
        let a = body(Vec3::zeros(), EulerAngles::new(0.3, 1.0, 0.0), Vec3::zeros(), Vec3::zeros());
        let b = body(Vec3::new(0.6, 0.8, 0.0), EulerAngles::new(1.0, 2.0, 0.0), Vec3::zeros(), Vec3::zeros());
        let c = detect_contact(&a, &b, &s).unwrap();
        assert!((c.k - Vec3::new(0.6, 0.8, 0.0)).norm() < 1e-15);
        assert!(c.depth.abs() < 1e-15);
        assert!((c.zeta - Vec3::new(0.3, 0.4, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn swapping_bodies_flips_normal() {
        let s = rod();
        let a = body(Vec3::zeros(), EulerAngles::new(0.2, 1.0, 0.0), Vec3::zeros(), Vec3::zeros());
        let b = body(Vec3::new(0.1, 0.15, 0.05), EulerAngles::new(1.4, 0.7, 0.0), Vec3::zeros(), Vec3::zeros());
        let c = detect_contact(&a, &b, &s).unwrap();
        let d = detect_contact(&b, &a, &s).unwrap();
        assert!((c.k + d.k).norm() < 1e-12);
        assert!((c.g1 - d.g2).norm() < 1e-12 && (c.g2 - d.g1).norm() < 1e-12);
    }

    #[test]
    fn contact_velocity_examples() {
        let s = MoleculeSpec::sphere(1.0, 0.5);
        let a = body(Vec3::zeros(), EulerAngles::new(0.0, 1.0, 0.0), Vec3::x(), Vec3::zeros());
        let b = body(Vec3::new(1.0, 0.0, 0.0), EulerAngles::new(0.0, 1.0, 0.0), -Vec3::x(), Vec3::zeros());
        let c = detect_contact(&a, &b, &s).unwrap();
        assert!((relative_contact_velocity(&a, &b, &c) - 2.0 * Vec3::x()).norm() < 1e-15);
        assert_eq!(relative_contact_velocity(&a, &a, &c), Vec3::zeros());
        // Spinning sphere against a static rod: the rigid velocity field at ζ.
        let w = Vec3::new(0.3, -1.0, 2.0);
        let sp = body(Vec3::zeros(), EulerAngles::new(0.0, 1.0, 0.0), Vec3::new(0.2, 0.0, 0.1), w);
        let rod = body(Vec3::new(0.5, 0.2, 0.0), EulerAngles::new(0.0, 0.3, 0.0), Vec3::zeros(), Vec3::zeros());
        let c = contact_geometry(&sp.q, &sp.director(), &rod.q, &rod.director(), &s);
        let g = relative_contact_velocity(&sp, &rod, &c);
        assert!((g - sp.point_velocity(&c.zeta)).norm() < 1e-15);
    }

    #[test]
    fn head_on_equal_spheres_swap_velocities() {
        let s = MoleculeSpec::sphere(1.0, 0.5);
        let a = RigidState::from_velocities(Vec3::zeros(), EulerAngles::new(0.0, 1.0, 0.0), Vec3::x(), Vec3::zeros(), &s);
        let b = RigidState::from_velocities(Vec3::x(), EulerAngles::new(0.5, 2.0, 0.1), -Vec3::x(), Vec3::zeros(), &s);
        let c = detect_contact(&a, &b, &s).unwrap();
        let out = resolve_collision(&a, &b, &c, &s).unwrap();
        let ka = out.post1.kinematics(&s).unwrap();
        let kb = out.post2.kinematics(&s).unwrap();
        assert!((ka.v + Vec3::x()).norm() < 1e-14 && (kb.v - Vec3::x()).norm() < 1e-14);
        assert!(ka.omega.norm() < 1e-14 && kb.omega.norm() < 1e-14);
        assert!((out.impulse - 2.0 * Vec3::x()).norm() < 1e-14);
        assert!(resolve_collision(&out.post1, &out.post2, &c, &s).is_err());
    }

    #[test]
    fn oblique_sphere_collision_matches_classical_formula() {
        let s = MoleculeSpec::sphere(2.0, 0.5);
        let k = Vec3::new(0.6, 0.8, 0.0);
        let (va, vb) = (Vec3::new(1.0, 0.5, -0.2), Vec3::new(-0.3, -0.4, 0.7));
        let a = body(Vec3::zeros(), EulerAngles::new(0.0, 1.0, 0.0), va, Vec3::new(0.1, 0.2, 0.3));
        let b = body(k, EulerAngles::new(0.0, 1.0, 0.0), vb, Vec3::zeros());
        let c = detect_contact(&a, &b, &s).unwrap();
        let (pa, pb, _) = resolve_kinematics(&a, &b, &c, &s).unwrap();
        // Equal masses exchange normal velocity components.
        let exchange = k * (va - vb).dot(&k);
        assert!((pa.v - (va - exchange)).norm() < 1e-14);
        assert!((pb.v - (vb + exchange)).norm() < 1e-14);
        assert!((pa.omega - a.omega).norm() < 1e-15);
    }

    #[test]
    fn receding_and_singular_errors() {
        let s = MoleculeSpec::sphere(1.0, 0.5);
        let a = body(Vec3::zeros(), EulerAngles::new(0.0, 1.0, 0.0), -Vec3::x(), Vec3::zeros());
        let b = body(Vec3::x(), EulerAngles::new(0.0, 1.0, 0.0), Vec3::x(), Vec3::zeros());
        let c = detect_contact(&a, &b, &s).unwrap();
        assert!(matches!(resolve_kinematics(&a, &b, &c, &s), Err(Error::Receding { .. })));
        let bad = MoleculeSpec { m: -1.0, ..s };
        let a = Kinematics { v: Vec3::x(), ..a };
        let b = Kinematics { v: -Vec3::x(), ..b };
        assert!(matches!(
            resolve_kinematics(&a, &b, &c, &bad),
            Err(Error::SingularEffectiveMass { .. })
        ));
    }

    #[test]
    fn needle_rods_receive_no_axial_spin() {
        let s = MoleculeSpec {
            i3: 1e-6,
            ..rod()
        };
        let a = body(Vec3::zeros(), EulerAngles::new(0.2, 1.0, 0.5), Vec3::new(0.5, 0.2, 0.1), Vec3::new(0.1, 0.0, 0.0));
        let b = body(Vec3::new(0.1, 0.18, 0.05), EulerAngles::new(1.4, 0.7, 0.0), Vec3::new(-0.5, -0.2, 0.0), Vec3::zeros());
        let c = detect_contact(&a, &b, &s).unwrap();
        let a = Kinematics { v: c.k, ..a };
        let b = Kinematics { v: -c.k, ..b };
        let (pa, pb, j) = resolve_kinematics(&a, &b, &c, &s).unwrap();
        assert!(j > 0.0);
        // Axial angular momentum I3 ω·ν is untouched; the impulse torque is normal to ν.
        let axial = |k: &Kinematics| k.angular_momentum(&s).dot(&k.director());
        assert!((axial(&pa) - axial(&a)).abs() < 1e-14);
        assert!((axial(&pb) - axial(&b)).abs() < 1e-14);
    }

    fn random_contact_pair(rng: &mut ChaCha8Rng, s: &MoleculeSpec) -> (RigidState, RigidState, Contact) {
        sample_approaching_pair(rng, s, 4.0)
    }

    #[test]
    fn random_collisions_conserve_invariants() {
        let s = rod();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let (a, b, c) = random_contact_pair(&mut rng, &s);
            let out = resolve_collision(&a, &b, &c, &s).unwrap();
            let r = out.invariant_residuals;
            assert_eq!(r[0], 0.0);
            assert!(r[1] <= 1e-12 && r[2] <= 1e-12 && r[3] <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn collision_is_an_involution_under_velocity_reversal() {
        let s = rod();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b, c) = random_contact_pair(&mut rng, &s);
            let ka = a.kinematics(&s).unwrap();
            let kb = b.kinematics(&s).unwrap();
            let (pa, pb, _) = resolve_kinematics(&ka, &kb, &c, &s).unwrap();
            let rev = |k: &Kinematics| Kinematics { v: -k.v, omega: -k.omega, ..*k };
            let (ra, rb, _) = resolve_kinematics(&rev(&pa), &rev(&pb), &c, &s).unwrap();
            assert!((ra.v + ka.v).norm() < 1e-10 && (rb.v + kb.v).norm() < 1e-10);
            assert!((ra.omega + ka.omega).norm() < 1e-10 && (rb.omega + kb.omega).norm() < 1e-10);
        }
    }

    #[test]
    fn effective_mass_is_positive() {
        let s = rod();
        let a = body(Vec3::zeros(), EulerAngles::new(0.2, 1.0, 0.5), Vec3::zeros(), Vec3::zeros());
        let c = Contact { zeta: Vec3::x(), k: Vec3::y(), g1: Vec3::x(), g2: -Vec3::x(), depth: 0.0 };
        let m = effective_inverse_mass(&a, &a, &c, &s);
        assert!(m > 2.0);
        assert_relative_eq!(
            a.lab_inverse_inertia(&s) * a.lab_inertia(&s),
            Mat3::identity(),
            epsilon = 1e-12
        );
    }
}
