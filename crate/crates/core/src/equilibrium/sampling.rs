use super::{CellGrid, Ensemble, EquilibriumParams};
use crate::rigidbody::{EulerAngles, GIMBAL_TOL};
use crate::{Error, Result, RigidState, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Target particles per collision cell for automatically sized cell grids.
const PARTICLES_PER_CELL: usize = 20;

/// Draws `count` independent molecules from the Maxwellian in a periodic cube of side
/// `(count / n)^{1/3}`.
///
/// Every particle uses its own ChaCha8 stream selected by its index, so the ensemble is
/// a pure function of `(params, count, seed)` regardless of the worker count.
pub fn sample_equilibrium(params: &EquilibriumParams, count: usize, seed: u64) -> Result<Ensemble> {
    params.validate()?;
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let side = (count as f64 / params.n).cbrt();
    let box_size = Vec3::repeat(side);
    let q_max = orientation_envelope(params);
    let particles: Vec<RigidState> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut st = sample_particle(params, q_max, &mut rng);
            st.q = Vec3::new(
                rng.random::<f64>() * side,
                rng.random::<f64>() * side,
                rng.random::<f64>() * side,
            );
            st
        })
        .collect();
    let cells = CellGrid::automatic(
        &box_size,
        count,
        params.spec.bounding_diameter(),
        PARTICLES_PER_CELL,
    );
    Ensemble::new(particles, box_size, cells)
}

/// Upper bound of `Q(α)` over all orientations.
fn orientation_envelope(params: &EquilibriumParams) -> f64 {
    let i_max = params.spec.i1.max(params.spec.i2).max(params.spec.i3);
    i_max * params.omega0.norm_squared() / (2.0 / 3.0 * params.theta_bar)
}

/// Draws orientation, velocity and angular velocity for one molecule at the origin.
///
/// `log_q_max` bounds `ln Q`; pass 0 when `ω0 = 0`.
pub fn sample_particle<R: Rng>(params: &EquilibriumParams, log_q_max: f64, rng: &mut R) -> RigidState {
    let spec = &params.spec;
    let alpha = loop {
        let a = EulerAngles::new(
            rng.random::<f64>() * TAU,
            (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos(),
            rng.random::<f64>() * TAU,
        );
        if a.a2.sin().abs() <= GIMBAL_TOL {
            continue;
        }
        if params.omega0 == Vec3::zeros() {
            break a;
        }
        let w = params.omega0;
        let log_q = w.dot(&(spec.lab_inertia(&a) * w)) / (2.0 / 3.0 * params.theta_bar);
        if rng.random::<f64>().ln() <= log_q - log_q_max {
            break a;
        }
    };
    let sv = params.velocity_variance().sqrt();
    let v = params.v0
        + Vec3::new(
            sv * rng.sample::<f64, _>(StandardNormal),
            sv * rng.sample::<f64, _>(StandardNormal),
            sv * rng.sample::<f64, _>(StandardNormal),
        );
    let moments = spec.principal_moments();
    let mut omega_body = Vec3::zeros();
    for &k in params.rotational_axes() {
        omega_body[k] = (params.energy_scale() / moments[k]).sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    let omega = params.omega0 + alpha.rotation() * omega_body;
    RigidState::from_velocities(Vec3::zeros(), alpha, v, omega, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MoleculeSpec;

    fn params() -> EquilibriumParams {
        EquilibriumParams::new(
            1.0,
            2.5,
            MoleculeSpec {
                i1: 1.0,
                i2: 1.0,
                i3: 0.5,
                ..MoleculeSpec::default()
            },
        )
    }

    #[test]
    fn same_seed_gives_identical_ensembles() {
        let a = sample_equilibrium(&params(), 500, 9).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| sample_equilibrium(&params(), 500, 9).unwrap());
        assert_eq!(a.particles, b.particles);
        let c = sample_equilibrium(&params(), 500, 10).unwrap();
        assert_ne!(a.particles, c.particles);
    }

    #[test]
    fn mean_square_speed() {
        let p = params();
        let e = sample_equilibrium(&p, 40_000, 1).unwrap();
        let n = e.len() as f64;
        let vals: Vec<f64> = e.particles.iter().map(|s| s.velocity(&p.spec).norm_squared()).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // 3 (2/5) 2.5 = 3
        assert!((mean - 3.0).abs() < 4.0 * (var / n).sqrt(), "{mean}");
    }

    #[test]
    fn zero_spin_axis_is_frozen_for_five_dof() {
        let p = params();
        let e = sample_equilibrium(&p, 200, 3).unwrap();
        for s in &e.particles {
            let w = s.body_angular_velocity(&p.spec).unwrap();
            assert!(w.z.abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_angles_are_normalized() {
        let e = sample_equilibrium(&params(), 300, 4).unwrap();
        assert!(e.is_consistent());
        for s in &e.particles {
            assert_eq!(s.alpha, s.alpha.normalized());
        }
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(sample_equilibrium(&params(), 0, 1).is_err());
        let mut p = params();
        p.spec.i2 = 0.0;
        assert!(matches!(
            sample_equilibrium(&p, 10, 1),
            Err(Error::DegenerateInertia { axis: 1, .. })
        ));
    }
}
