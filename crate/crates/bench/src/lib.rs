//! Fixtures shared by the criterion benchmarks.

use nematikin::collision::{sample_approaching_pair, Contact, Dsmc};
use nematikin::director::DirectorField;
use nematikin::equilibrium::{sample_equilibrium, CellGrid, Ensemble, EquilibriumParams};
use nematikin::hydro::{FluidField, Preset};
use nematikin::{MoleculeSpec, PeriodicGrid, RigidState, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rod() -> MoleculeSpec {
    MoleculeSpec { m: 1.0, i1: 0.4, i2: 0.4, i3: 0.05, lambda1: 0.4, eps: 0.04, rod_halflength: 0.5, rod_radius: 0.1 }
}

pub fn contact_pairs(count: usize, seed: u64) -> Vec<(RigidState, RigidState, Contact)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_approaching_pair(&mut rng, &rod(), 4.0)).collect()
}

pub fn equilibrium_ensemble(count: usize, seed: u64) -> Ensemble {
    sample_equilibrium(&EquilibriumParams::new(1.0, 2.5, rod()), count, seed).expect("valid parameters")
}

pub fn dsmc_box(count: usize, seed: u64) -> Dsmc {
    let spec = rod();
    let mut ens = sample_equilibrium(&EquilibriumParams::new(0.05, 2.5, spec), count, seed).expect("valid parameters");
    let cells = CellGrid::automatic(&ens.box_size(), count, spec.bounding_diameter(), 10);
    ens.set_cells(cells).expect("cells");
    Dsmc::from_ensemble(&ens, &spec, seed).expect("dsmc")
}

pub fn fluid_spec() -> MoleculeSpec {
    MoleculeSpec { m: 1.0, i1: 1.0, i2: 1.0, i3: 1.0, lambda1: 0.05, ..MoleculeSpec::default() }
}

/// Density pulse with a gently twisted director on an `n × n` grid.
pub fn fluid_plane(n: usize) -> FluidField {
    let grid = PeriodicGrid::plane(n, n, 1.0, 1.0).expect("grid");
    let mut state = Preset::DensityPulse2d {
        rho: 1.0,
        psi0: 1.0,
        amplitude: 0.2,
        width: 0.1,
        velocity: [0.3, -0.1, 0.0],
        director: [1.0, 0.0, 0.0],
    }
    .build(grid, &fluid_spec())
    .expect("preset");
    for i in 0..state.len() {
        let x = grid.position(i);
        let phi = 0.4 * (TAU * x.x).sin() + 0.3 * (TAU * x.y).cos();
        state.nu[i] = Vec3::new(phi.cos(), phi.sin(), 0.0);
    }
    state
}

pub fn twisted_director(n: usize) -> DirectorField {
    let grid = PeriodicGrid::new([n, n, n], [1.0 / n as f64; 3]).expect("grid");
    DirectorField::from_fn(grid, |x| {
        let theta = 0.6 + 0.3 * (TAU * (x.x + 2.0 * x.z)).sin();
        let phi = TAU * x.y + 0.5 * (TAU * x.x).cos();
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    })
    .expect("unit field")
}
