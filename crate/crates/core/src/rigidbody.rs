//! Kinematics and mechanics of a single rigid calamitic molecule.
//!
//! Orientation uses z–x–z Euler angles: precession `a1` about the lab z axis, nutation
//! `a2` about the node line, intrinsic rotation `a3` about the body symmetry axis. The
//! body-to-lab rotation is `R = Rz(a1) Rx(a2) Rz(a3)` and the director is its third
//! column.
//!
//! Angular velocities returned by [`angular_velocity`] are body-frame components,
//! `ω = Ξ(α) α̇`; [`lab_angular_velocity`] rotates them into the lab frame.

use crate::{Error, Mat3, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Default tolerance on `|sin a2|` below which the Euler chart is treated as singular.
pub const GIMBAL_TOL: f64 = 1e-8;

/// Tolerance on `| |ν| - 1 |` for inputs that must be unit vectors.
pub const UNIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    /// Precession (rad).
    pub a1: f64,
    /// Nutation (rad).
    pub a2: f64,
    /// Intrinsic rotation (rad).
    pub a3: f64,
}

impl EulerAngles {
    pub const fn new(a1: f64, a2: f64, a3: f64) -> Self {
        Self { a1, a2, a3 }
    }

    pub fn as_vector(&self) -> Vec3 {
        Vec3::new(self.a1, self.a2, self.a3)
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Maps onto `a2 ∈ [0, π]`, `a1, a3 ∈ [0, 2π)` while describing the same rotation.
    pub fn normalized(&self) -> Self {
        let mut a1 = self.a1;
        let mut a2 = self.a2.rem_euclid(TAU);
        let mut a3 = self.a3;
        if a2 > PI {
            // Rz(a1) Rx(-b) Rz(a3) = Rz(a1 + π) Rx(b) Rz(a3 + π)
            a2 = TAU - a2;
            a1 += PI;
            a3 += PI;
        }
        Self::new(a1.rem_euclid(TAU), a2, a3.rem_euclid(TAU))
    }

    pub fn sin_nutation(&self) -> f64 {
        self.a2.sin()
    }

    /// Body-to-lab rotation `Rz(a1) Rx(a2) Rz(a3)`.
    pub fn rotation(&self) -> Mat3 {
        let (s1, c1) = self.a1.sin_cos();
        let (s2, c2) = self.a2.sin_cos();
        let (s3, c3) = self.a3.sin_cos();
        Mat3::new(
            c1 * c3 - s1 * c2 * s3,
            -c1 * s3 - s1 * c2 * c3,
            s1 * s2,
            s1 * c3 + c1 * c2 * s3,
            -s1 * s3 + c1 * c2 * c3,
            -c1 * s2,
            s2 * s3,
            s2 * c3,
            c2,
        )
    }

    /// Inverse of [`EulerAngles::rotation`] for a proper rotation matrix.
    pub fn from_rotation(r: &Mat3) -> Self {
        let c2 = r[(2, 2)].clamp(-1.0, 1.0);
        let s2 = (r[(0, 2)].powi(2) + r[(1, 2)].powi(2)).sqrt();
        let a2 = s2.atan2(c2);
        if s2 < 1e-12 {
            // a1 and a3 are not separable; put all of the in-plane angle into a1.
            let a1 = r[(1, 0)].atan2(r[(0, 0)]);
            return Self::new(a1, a2, 0.0).normalized();
        }
        let a1 = r[(0, 2)].atan2(-r[(1, 2)]);
        let a3 = r[(2, 0)].atan2(r[(2, 1)]);
        Self::new(a1, a2, a3).normalized()
    }
}

/// Physical description of one molecule species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeSpec {
    pub m: f64,
    /// Nondimensional principal moments of inertia; axis 3 is the symmetry axis.
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// Needle inertia coefficient in `𝕀 ≈ λ1 (I − ν⊗ν)`.
    pub lambda1: f64,
    /// Girth parameter `(δ/ℓ)²`.
    pub eps: f64,
    pub rod_halflength: f64,
    pub rod_radius: f64,
}

impl Default for MoleculeSpec {
    fn default() -> Self {
        Self {
            m: 1.0,
            i1: 1.0,
            i2: 1.0,
            i3: 1.0,
            lambda1: 1.0,
            eps: 0.0,
            rod_halflength: 0.5,
            rod_radius: 0.1,
        }
    }
}

impl MoleculeSpec {
    /// Uniform sphere of the given mass and radius (rod half-length 0).
    pub fn sphere(m: f64, radius: f64) -> Self {
        let i = 0.4 * m * radius * radius;
        Self {
            m,
            i1: i,
            i2: i,
            i3: i,
            lambda1: i,
            eps: 1.0,
            rod_halflength: 0.0,
            rod_radius: radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.m) {
            return Err(Error::invalid("m", "mass must be positive"));
        }
        for (axis, &v) in [self.i1, self.i2, self.i3].iter().enumerate() {
            if !positive(v) {
                return Err(Error::DegenerateInertia { axis, value: v });
            }
        }
        if !positive(self.lambda1) {
            return Err(Error::invalid("lambda1", "must be positive"));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::invalid("eps", "must be non-negative"));
        }
        if !(self.rod_halflength.is_finite() && self.rod_halflength >= 0.0) {
            return Err(Error::invalid("rod_halflength", "must be non-negative"));
        }
        if !positive(self.rod_radius) {
            return Err(Error::invalid("rod_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn principal_moments(&self) -> Vec3 {
        Vec3::new(self.i1, self.i2, self.i3)
    }

    /// `diag(I1, I2, I3)` in the body principal frame.
    pub fn body_inertia(&self) -> Mat3 {
        Mat3::from_diagonal(&self.principal_moments())
    }

    /// `(I1 I2 I3)^{1/2}`.
    pub fn inertia_root_product(&self) -> f64 {
        (self.i1 * self.i2 * self.i3).sqrt()
    }

    /// Lab-frame inertia tensor `R diag(I) Rᵀ` for orientation `alpha`.
    pub fn lab_inertia(&self, alpha: &EulerAngles) -> Mat3 {
        let r = alpha.rotation();
        r * self.body_inertia() * r.transpose()
    }

    /// Diameter of the smallest sphere enclosing one spherocylinder.
    pub fn bounding_diameter(&self) -> f64 {
        2.0 * (self.rod_halflength + self.rod_radius)
    }
}

/// Phase point `(q, α, p, ς)` of one molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidState {
    pub q: Vec3,
    pub alpha: EulerAngles,
    pub p: Vec3,
    /// Momentum conjugate to the Euler angles.
    pub sigma: Vec3,
}

impl RigidState {
    /// Builds a state from translational velocity and lab-frame angular velocity.
    ///
    /// Only the forward Legendre map is involved, so this never fails.
    pub fn from_velocities(
        q: Vec3,
        alpha: EulerAngles,
        v: Vec3,
        omega_lab: Vec3,
        spec: &MoleculeSpec,
    ) -> Self {
        let omega_body = alpha.rotation().transpose() * omega_lab;
        let sigma = xi_matrix(&alpha).transpose() * (spec.body_inertia() * omega_body);
        Self {
            q,
            alpha,
            p: spec.m * v,
            sigma,
        }
    }

    pub fn velocity(&self, spec: &MoleculeSpec) -> Vec3 {
        self.p / spec.m
    }

    /// Body-frame angular velocity `𝕀⁻¹ Ξ⁻ᵀ ς`.
    pub fn body_angular_velocity(&self, spec: &MoleculeSpec) -> Result<Vec3> {
        check_gimbal(&self.alpha, GIMBAL_TOL)?;
        let xi_t = xi_matrix(&self.alpha).transpose();
        let body_momentum = xi_t
            .lu()
            .solve(&self.sigma)
            .ok_or(Error::GimbalSingular {
                sin_nutation: self.alpha.sin_nutation().abs(),
                tol: GIMBAL_TOL,
            })?;
        Ok(body_momentum.component_div(&spec.principal_moments()))
    }

    pub fn lab_angular_velocity(&self, spec: &MoleculeSpec) -> Result<Vec3> {
        Ok(self.alpha.rotation() * self.body_angular_velocity(spec)?)
    }

    pub fn director(&self) -> Vec3 {
        director_from_angles(&self.alpha)
    }

    /// Lab-frame kinematic view used by the collision code.
    pub fn kinematics(&self, spec: &MoleculeSpec) -> Result<Kinematics> {
        let rotation = self.alpha.rotation();
        let omega_body = self.body_angular_velocity(spec)?;
        Ok(Kinematics {
            q: self.q,
            v: self.velocity(spec),
            omega: rotation * omega_body,
            rotation,
        })
    }
}

/// Lab-frame position, velocity, angular velocity and orientation of a molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub q: Vec3,
    pub v: Vec3,
    pub omega: Vec3,
    /// Body-to-lab rotation.
    pub rotation: Mat3,
}

impl Kinematics {
    pub fn director(&self) -> Vec3 {
        self.rotation.column(2).into_owned()
    }

    pub fn lab_inertia(&self, spec: &MoleculeSpec) -> Mat3 {
        self.rotation * spec.body_inertia() * self.rotation.transpose()
    }

    pub fn lab_inverse_inertia(&self, spec: &MoleculeSpec) -> Mat3 {
        let inv = Mat3::from_diagonal(&spec.principal_moments().map(|i| 1.0 / i));
        self.rotation * inv * self.rotation.transpose()
    }

    /// Rigid velocity field `ω × (x − q) + v` evaluated at `x`.
    pub fn point_velocity(&self, x: &Vec3) -> Vec3 {
        self.omega.cross(&(x - self.q)) + self.v
    }

    pub fn angular_momentum(&self, spec: &MoleculeSpec) -> Vec3 {
        self.lab_inertia(spec) * self.omega
    }

    pub fn kinetic_energy(&self, spec: &MoleculeSpec) -> f64 {
        0.5 * spec.m * self.v.norm_squared()
            + 0.5 * self.omega.dot(&(self.lab_inertia(spec) * self.omega))
    }

    pub fn to_state(&self, spec: &MoleculeSpec) -> RigidState {
        let alpha = EulerAngles::from_rotation(&self.rotation);
        RigidState::from_velocities(self.q, alpha, self.v, self.omega, spec)
    }
}

pub fn check_gimbal(alpha: &EulerAngles, tol: f64) -> Result<()> {
    let s = alpha.sin_nutation().abs();
    if s <= tol {
        Err(Error::GimbalSingular {
            sin_nutation: s,
            tol,
        })
    } else {
        Ok(())
    }
}

/// Ξ(α), mapping Euler-angle rates to body-frame angular velocity.
pub fn xi_matrix(alpha: &EulerAngles) -> Mat3 {
    let (s2, c2) = alpha.a2.sin_cos();
    let (s3, c3) = alpha.a3.sin_cos();
    Mat3::new(s2 * s3, c3, 0.0, s2 * c3, -s3, 0.0, c2, 0.0, 1.0)
}

/// Body-frame angular velocity `Ξ(α) α̇`.
pub fn angular_velocity(alpha: &EulerAngles, alpha_dot: &Vec3) -> Vec3 {
    xi_matrix(alpha) * alpha_dot
}

/// Lab-frame angular velocity `R(α) Ξ(α) α̇`.
pub fn lab_angular_velocity(alpha: &EulerAngles, alpha_dot: &Vec3) -> Vec3 {
    alpha.rotation() * angular_velocity(alpha, alpha_dot)
}

/// Euler-angle rates producing the body-frame angular velocity `omega`.
pub fn rates_from_angular_velocity(alpha: &EulerAngles, omega: &Vec3) -> Result<Vec3> {
    rates_from_angular_velocity_tol(alpha, omega, GIMBAL_TOL)
}

pub fn rates_from_angular_velocity_tol(
    alpha: &EulerAngles,
    omega: &Vec3,
    gimbal_tol: f64,
) -> Result<Vec3> {
    check_gimbal(alpha, gimbal_tol)?;
    let s2 = alpha.a2.sin();
    let c2 = alpha.a2.cos();
    let (s3, c3) = alpha.a3.sin_cos();
    // Closed-form Ξ⁻¹.
    let a1_dot = (s3 * omega.x + c3 * omega.y) / s2;
    let a2_dot = c3 * omega.x - s3 * omega.y;
    let a3_dot = omega.z - c2 * a1_dot;
    Ok(Vec3::new(a1_dot, a2_dot, a3_dot))
}

/// Needle-limit inertia tensor `λ1 (I − ν⊗ν)`.
pub fn inertia_needle(spec: &MoleculeSpec, nu: &Vec3) -> Result<Mat3> {
    let norm = nu.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm });
    }
    Ok(spec.lambda1 * (Mat3::identity() - nu * nu.transpose()))
}

/// Rotated body symmetry axis `R(α) e3`.
pub fn director_from_angles(alpha: &EulerAngles) -> Vec3 {
    let (s1, c1) = alpha.a1.sin_cos();
    let (s2, c2) = alpha.a2.sin_cos();
    Vec3::new(s1 * s2, -c1 * s2, c2)
}

/// Rate of change of a body-fixed unit vector under rigid rotation, `ω × ν`.
pub fn director_rate(omega: &Vec3, nu: &Vec3) -> Vec3 {
    omega.cross(nu)
}

/// Hessian of the Lagrangian in the angle rates, `Ξᵀ 𝕀 Ξ`.
pub fn generalized_inertia(alpha: &EulerAngles, spec: &MoleculeSpec) -> Mat3 {
    let xi = xi_matrix(alpha);
    xi.transpose() * spec.body_inertia() * xi
}

/// Lagrangian kinetic energy `½ m |q̇|² + ½ α̇ · Ξᵀ𝕀Ξ α̇`.
pub fn lagrangian_kinetic_energy(
    alpha: &EulerAngles,
    q_dot: &Vec3,
    alpha_dot: &Vec3,
    spec: &MoleculeSpec,
) -> f64 {
    0.5 * spec.m * q_dot.norm_squared()
        + 0.5 * alpha_dot.dot(&(generalized_inertia(alpha, spec) * alpha_dot))
}

/// `H = |p|²/2m + ½ ς · (Ξᵀ𝕀Ξ)⁻¹ ς`.
pub fn hamiltonian(state: &RigidState, spec: &MoleculeSpec) -> Result<f64> {
    check_gimbal(&state.alpha, GIMBAL_TOL)?;
    let rot = solve_generalized(&state.alpha, &state.sigma, spec)?;
    Ok(state.p.norm_squared() / (2.0 * spec.m) + 0.5 * state.sigma.dot(&rot))
}

/// `(q̇, α̇) ↦ (p, ς) = (m q̇, Ξᵀ𝕀Ξ α̇)`.
pub fn legendre_forward(
    alpha: &EulerAngles,
    q_dot: &Vec3,
    alpha_dot: &Vec3,
    spec: &MoleculeSpec,
) -> (Vec3, Vec3) {
    (
        spec.m * q_dot,
        generalized_inertia(alpha, spec) * alpha_dot,
    )
}

/// Inverse of [`legendre_forward`].
pub fn legendre_inverse(
    alpha: &EulerAngles,
    p: &Vec3,
    sigma: &Vec3,
    spec: &MoleculeSpec,
) -> Result<(Vec3, Vec3)> {
    check_gimbal(alpha, GIMBAL_TOL)?;
    Ok((p / spec.m, solve_generalized(alpha, sigma, spec)?))
}

fn solve_generalized(alpha: &EulerAngles, rhs: &Vec3, spec: &MoleculeSpec) -> Result<Vec3> {
    generalized_inertia(alpha, spec)
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or(Error::GimbalSingular {
            sin_nutation: alpha.sin_nutation().abs(),
            tol: GIMBAL_TOL,
        })
}

fn axis_rotation(axis: usize, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    match axis {
        0 => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        _ => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

/// Advances a torque-free rigid body by `dt`.
///
/// Symmetric tops (`I1 = I2`) are advanced with the exact solution: a rotation about
/// the fixed angular momentum at rate `|L|/I1` composed with a body-frame spin about
/// the symmetry axis. Other bodies use the symmetric splitting of the free rotor into
/// exact rotations about the body axes, which preserves the lab angular momentum but
/// conserves energy only to `O(dt²)`.
///
/// Returns the new body-to-lab rotation and lab angular velocity.
pub fn torque_free_step(
    rotation: &Mat3,
    omega_lab: &Vec3,
    spec: &MoleculeSpec,
    dt: f64,
) -> (Mat3, Vec3) {
    let moments = spec.principal_moments();
    let lab_momentum = rotation * spec.body_inertia() * rotation.transpose() * omega_lab;
    if spec.i1 == spec.i2 {
        let body_momentum = rotation.transpose() * lab_momentum;
        let spin = (1.0 / spec.i3 - 1.0 / spec.i1) * body_momentum.z * dt;
        let precession = nalgebra::Rotation3::new(lab_momentum * (dt / spec.i1));
        let r = precession.matrix() * rotation * axis_rotation(2, spin);
        let omega_body = (r.transpose() * lab_momentum).component_div(&moments);
        return (r, r * omega_body);
    }
    let mut r = *rotation;
    let mut body_momentum = r.transpose() * lab_momentum;
    for (axis, frac) in [(0, 0.5), (1, 0.5), (2, 1.0), (1, 0.5), (0, 0.5)] {
        let angle = frac * dt * body_momentum[axis] / moments[axis];
        let step = axis_rotation(axis, angle);
        r *= step;
        body_momentum = step.transpose() * body_momentum;
    }
    let omega_body = body_momentum.component_div(&moments);
    (r, r * omega_body)
}
