//! Simulation toolkit for rarefied calamitic (rodlike) gases with nematic ordering.
//!
//! The crate is organised bottom-up:
//!
//! - [`rigidbody`]: Euler-angle kinematics and the Lagrangian/Hamiltonian mechanics
//!   of a single rigid molecule.
//! - [`equilibrium`]: the Maxwellian of a rigid-rotor gas, ensemble sampling and
//!   bracket-average moment estimation.
//! - [`collision`]: hard spherocylinder contacts, impulsive collision resolution and a
//!   cell-based DSMC collision step.
//! - [`director`]: pressure-dependent Oseen–Frank energy, the Ericksen identity and the
//!   nematic stress / couple-stress closure.
//! - [`hydro`]: time integration of the compressible Leslie–Ericksen system on periodic
//!   grids, with conservation and rate-of-work diagnostics.

pub mod collision;
pub mod director;
pub mod equilibrium;
mod error;
pub mod grid;
pub mod hydro;
pub mod parallel;
pub mod quadrature;
pub mod rigidbody;
pub mod units;

pub use error::{Error, Result};
pub use grid::PeriodicGrid;
pub use rigidbody::{EulerAngles, MoleculeSpec, RigidState};

/// 3×3 real matrix (inertia tensors, Ξ, gradients, stresses).
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Real 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;
