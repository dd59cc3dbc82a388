use crate::config::{Tolerances, VerifyParams};
use crate::{Context, RunError};
use nematikin::collision::{resolve_collision, sample_approaching_pair};
use nematikin::director::{
    couple_stress_nematic, ericksen_identity_residual, nematic_stress, oseen_frank_density, DirectorField,
    LinearCoupling, OneConstant,
};
use nematikin::equilibrium::{
    bootstrap_standard_errors, estimate_moments, pressure_prefactor_diagnostic, sample_equilibrium, EquilibriumParams,
};
use nematikin::hydro::{closure_coefficient, rhs, FluidField, Preset, SolverConfig};
use nematikin::rigidbody::{
    director_from_angles, hamiltonian, lab_angular_velocity, lagrangian_kinetic_energy, legendre_forward,
    legendre_inverse,
};
use nematikin::{EulerAngles, MoleculeSpec, PeriodicGrid, RigidState, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
    detail: String,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name, passed: value <= tolerance, value, tolerance, detail: detail.into() }
    }

    fn at_least(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name, passed: value >= tolerance, value, tolerance, detail: detail.into() }
    }
}

fn rod() -> MoleculeSpec {
    MoleculeSpec { m: 1.0, i1: 0.4, i2: 0.55, i3: 0.05, lambda1: 0.4, eps: 0.04, rod_halflength: 0.5, rod_radius: 0.1 }
}

fn random_angles(rng: &mut ChaCha8Rng) -> EulerAngles {
    EulerAngles::new(rng.random::<f64>() * TAU, 0.2 + 2.7 * rng.random::<f64>(), rng.random::<f64>() * TAU)
}

fn random_vec(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 2.0
}

fn collision_invariants(count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, RunError> {
    let spec = rod();
    let tol = Tolerances::default();
    let mut worst = [0.0f64; 4];
    for _ in 0..count {
        let (a, b, c) = sample_approaching_pair(rng, &spec, 4.0);
        let r = resolve_collision(&a, &b, &c, &spec)?.invariant_residuals;
        for (w, x) in worst.iter_mut().zip(r) {
            *w = w.max(x);
        }
    }
    let detail = format!("{count} random spherocylinder collisions");
    Ok(vec![
        Check::at_most("collision particle number", worst[0], 0.0, detail.clone()),
        Check::at_most("collision linear momentum", worst[1], tol.momentum, detail.clone()),
        Check::at_most("collision angular momentum", worst[2], tol.angular_momentum, detail.clone()),
        Check::at_most("collision kinetic energy", worst[3], tol.energy, detail),
    ])
}

fn mechanics(rng: &mut ChaCha8Rng) -> Result<Vec<Check>, RunError> {
    let spec = rod();
    let (mut round_trip, mut energy_gap) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let alpha = random_angles(rng);
        let (q_dot, alpha_dot) = (random_vec(rng), random_vec(rng));
        let (p, sigma) = legendre_forward(&alpha, &q_dot, &alpha_dot, &spec);
        let (q_back, a_back) = legendre_inverse(&alpha, &p, &sigma, &spec)?;
        round_trip = round_trip.max((q_back - q_dot).norm().max((a_back - alpha_dot).norm()) / alpha_dot.norm());
        let state = RigidState { q: Vec3::zeros(), alpha, p, sigma };
        let lagrangian = lagrangian_kinetic_energy(&alpha, &q_dot, &alpha_dot, &spec);
        energy_gap = energy_gap.max((hamiltonian(&state, &spec)? - lagrangian).abs() / lagrangian);
    }
    let alpha = |t: f64| EulerAngles::new(0.3 + 1.1 * t + 0.4 * t * t, 1.0 - 0.7 * t + 0.2 * t * t, -0.5 + 2.0 * t);
    let alpha_dot = |t: f64| Vec3::new(1.1 + 0.8 * t, -0.7 + 0.4 * t, 2.0);
    let t0 = 0.37;
    let exact = lab_angular_velocity(&alpha(t0), &alpha_dot(t0)).cross(&director_from_angles(&alpha(t0)));
    let error = |dt: f64| {
        ((director_from_angles(&alpha(t0 + dt)) - director_from_angles(&alpha(t0 - dt))) / (2.0 * dt) - exact).norm()
    };
    let order = (error(1e-2) / error(1e-3)).log10().min((error(1e-3) / error(1e-4)).log10());
    Ok(vec![
        Check::at_most("legendre round trip", round_trip, 1e-12, "200 random phase points"),
        Check::at_most("hamiltonian equals kinetic energy", energy_gap, 1e-12, "200 random phase points"),
        Check::at_least("director rate is omega x nu", order, 1.9, "central-difference order over dt 1e-2..1e-4"),
    ])
}

fn equilibrium(samples: usize, seed: u64) -> Result<Vec<Check>, RunError> {
    let params = EquilibriumParams::new(1.0, 2.5, rod());
    let ens = sample_equilibrium(&params, samples, seed)?;
    let m = estimate_moments(&ens, &params.spec)?;
    let se = bootstrap_standard_errors(&ens, &params.spec, 100, seed ^ 0x5EED)?;
    let theta_z = (m.theta_bar - params.theta_bar).abs() / se.theta_bar;
    let variance = params.velocity_variance();
    let pressure_z = (0..3).map(|a| (m.P[(a, a)] - variance).abs() / se.P[(a, a)]).fold(0.0, f64::max);
    let couple_z = m.M.iter().zip(se.M.iter()).map(|(x, s)| x.abs() / s).fold(0.0, f64::max);
    let diag = pressure_prefactor_diagnostic(&params);
    let detail = format!("{samples} equilibrium samples, bootstrap standard errors");
    Ok(vec![
        Check::at_most("equipartition of <theta>", theta_z, 5.0, format!("{detail} (sigmas)")),
        Check::at_most("pressure matches velocity variance", pressure_z, 5.0, format!("{detail} (sigmas)")),
        Check::at_most("equilibrium couple stress vanishes", couple_z, 4.0, format!("{detail} (sigmas)")),
        Check {
            name: "pressure prefactor diagnostic",
            passed: true,
            value: diag.ratio,
            tolerance: 1.0,
            detail: format!(
                "analytic {:.6} vs Gaussian variance {:.6}; flagged {}",
                diag.analytic, diag.oracle, diag.flagged
            ),
        },
    ])
}

fn smooth_field(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> nematikin::Result<DirectorField> {
    let modes: Vec<(Vec3, f64, f64, f64)> = (0..4)
        .map(|_| {
            let k = Vec3::new(
                f64::from(rng.random_range(-2i32..=2)),
                f64::from(rng.random_range(-2i32..=2)),
                f64::from(rng.random_range(-2i32..=2)),
            );
            (k, rng.random::<f64>() * TAU, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
        .collect();
    DirectorField::from_fn(grid, |x| {
        let (mut theta, mut phi) = (0.8, 0.3);
        for (k, phase, a, b) in &modes {
            let arg = TAU * k.dot(&x) + phase;
            theta += a * arg.sin();
            phi += 2.0 * b * arg.cos();
        }
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    })
}

fn director(fields: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, RunError> {
    let grid = PeriodicGrid::new([6, 6, 6], [1.0 / 6.0; 3])?;
    let energy = OneConstant { stiffness: 1.3 };
    let control = LinearCoupling { a: Vec3::new(0.3, -0.8, 0.5) };
    let (mut ericksen, mut control_min, mut trace_gap, mut couple_dot) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..fields {
        let field = smooth_field(grid, rng)?;
        let mut control_field = 0.0f64;
        for (nu, g) in field.as_slice().iter().zip(field.gradients()) {
            ericksen = ericksen.max(ericksen_identity_residual(&energy, nu, &g).norm());
            control_field = control_field.max(ericksen_identity_residual(&control, nu, &g).norm());
        }
        control_min = control_min.min(control_field);
        let p_k = vec![1.7; grid.len()];
        let density = oseen_frank_density(&field, &p_k, 0.6)?;
        let stress = nematic_stress(&field, &p_k, 0.6)?;
        let couple = couple_stress_nematic(&field, &p_k, 0.6)?;
        for i in 0..grid.len() {
            trace_gap = trace_gap.max((stress[i].trace() - density[i]).abs() / density[i].max(1e-300));
            couple_dot = couple_dot.max((couple[i].transpose() * field.as_slice()[i]).norm());
        }
    }
    let detail = format!("{fields} random smooth unit fields on a 6^3 grid");
    Ok(vec![
        Check::at_most("ericksen identity (one-constant)", ericksen, 1e-8, detail.clone()),
        Check::at_least("ericksen identity broken by linear coupling", control_min, 1e-2, detail.clone()),
        Check::at_most("nematic stress trace equals energy density", trace_gap, 1e-12, detail.clone()),
        Check::at_most("couple stress orthogonal to director", couple_dot, 1e-12, detail),
    ])
}

fn continuum() -> Result<Vec<Check>, RunError> {
    let spec = MoleculeSpec { m: 1.0, i1: 1.0, i2: 1.0, i3: 1.0, lambda1: 0.05, ..MoleculeSpec::default() };
    let config = SolverConfig { spec, ..SolverConfig::default() };
    let grid = PeriodicGrid::line(32, 1.0)?;
    let helix = Preset::HelixDirector { rho: 1.0, psi0: 1.5, turns: 1, velocity: [0.0; 3] }.build(grid, &spec)?;
    let h = grid.spacing[0];
    let k2 = (2.0 - 2.0 * (TAU * h).cos()) / (h * h);
    let tau_exact = closure_coefficient(&spec) * 1.5 * 0.5 * spec.lambda1 * k2;
    let rates = rhs(&helix, &config)?;
    let tau_gap = rates.tau.iter().map(|t| (t / tau_exact - 1.0).abs()).fold(0.0, f64::max);
    let uniform = FluidField::uniform(
        PeriodicGrid::plane(8, 6, 1.0, 0.75)?,
        1.3,
        Vec3::new(0.2, -0.1, 0.05),
        Vec3::new(0.0, 0.6, 0.8),
        0.9,
    )?;
    let r = rhs(&uniform, &config)?;
    let largest = r
        .rho
        .iter()
        .chain(&r.energy)
        .map(|x| x.abs())
        .chain(r.momentum.iter().chain(&r.nu).map(|v| v.amax()))
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("helix multiplier matches discrete oracle", tau_gap, 1e-12, "32-node helix, relative"),
        Check::at_most("uniform state is a fixed point", largest, 0.0, "largest rate on an 8x6 uniform state"),
    ])
}

pub(crate) fn verify_identities(ctx: &mut Context) -> Result<(bool, String), RunError> {
    let p: VerifyParams = ctx.config.params()?;
    if p.samples < 2 {
        return Err(RunError::config("params.samples", "need at least two"));
    }
    let seed = ctx.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = collision_invariants(p.collisions, &mut rng)?;
    checks.extend(mechanics(&mut rng)?);
    checks.extend(equilibrium(p.samples, seed)?);
    checks.extend(director(p.fields, &mut rng)?);
    checks.extend(continuum()?);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let passed = failed.is_empty();
    ctx.write_json(
        "verify_report.json",
        &serde_json::json!({ "mode": "verify-identities", "seed": seed, "passed": passed, "checks": checks }),
    )?;
    let summary = if passed {
        format!("all {} identity checks passed", checks.len())
    } else {
        format!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "))
    };
    Ok((passed, summary))
}
