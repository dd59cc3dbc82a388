mod verify;

pub(crate) use verify::verify_identities;

use crate::config::{
    CollideParams, DsmcParams, InitialDirector, RelaxParams, SampleMomentsParams, SolveParams,
};
use crate::{Context, RunError};
use nematikin::collision::{resolve_collision, sample_approaching_pair, CollisionRecord, Dsmc};
use nematikin::director::{self, stable_relaxation_step, DirectorField};
use nematikin::equilibrium::{
    bootstrap_standard_errors, estimate_moments, pressure_prefactor_diagnostic, pressure_tensor_oracle,
    sample_equilibrium, CellGrid,
};
use nematikin::hydro::{DiagnosticsRow, FluidField, Solver};
use nematikin::{Vec3, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::TAU;
use std::io::Write;

type ModeResult = Result<(bool, String), RunError>;

/// Stream offset separating bootstrap draws from the sampling streams.
const BOOTSTRAP_STREAM_SEED: u64 = 0xB007_5EED;

fn positive(name: &str, value: f64) -> Result<(), RunError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(RunError::config(format!("params.{name}"), "must be positive"))
    }
}

fn nonzero(name: &str, value: usize) -> Result<(), RunError> {
    if value == 0 {
        Err(RunError::config(format!("params.{name}"), "must be at least 1"))
    } else {
        Ok(())
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e)
}

pub(crate) fn sample_moments(ctx: &mut Context) -> ModeResult {
    let p: SampleMomentsParams = ctx.config.params()?;
    p.equilibrium.validate()?;
    nonzero("count", p.count)?;
    if p.resamples < 2 {
        return Err(RunError::config("params.resamples", "need at least two"));
    }
    let seed = ctx.seed()?;
    let spec = p.equilibrium.spec;
    let ens = sample_equilibrium(&p.equilibrium, p.count, seed)?;
    let moments = estimate_moments(&ens, &spec)?;
    let errors = bootstrap_standard_errors(&ens, &spec, p.resamples, seed ^ BOOTSTRAP_STREAM_SEED)?;
    let oracle = pressure_tensor_oracle(&p.equilibrium);
    let z_pressure: Vec<f64> = (0..3)
        .map(|a| (moments.P[(a, a)] - oracle[(a, a)]) / errors.P[(a, a)])
        .collect();
    if p.write_ensemble {
        ctx.write_with("ensemble.csv", |w| ens.write_csv(w))?;
    }
    let diagnostic = pressure_prefactor_diagnostic(&p.equilibrium);
    ctx.write_json(
        "moments.json",
        &json!({
            "mode": "sample-moments",
            "seed": seed,
            "count": p.count,
            "moments": moments,
            "standard_errors": errors,
            "pressure_oracle_diagonal": oracle[(0, 0)],
            "pressure_z_scores": z_pressure,
            "prefactor_diagnostic": diagnostic,
        }),
    )?;
    Ok((
        true,
        format!(
            "sampled {} molecules: <theta> = {:.6}, p_K = {:.6}, prefactor ratio {:.6}{}",
            p.count,
            moments.theta_bar,
            moments.p_K,
            diagnostic.ratio,
            if diagnostic.flagged { " (flagged)" } else { "" }
        ),
    ))
}

pub(crate) fn collide(ctx: &mut Context) -> ModeResult {
    let p: CollideParams = ctx.config.params()?;
    p.spec.validate()?;
    nonzero("count", p.count)?;
    positive("velocity_scale", p.velocity_scale)?;
    let seed = ctx.seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 4];
    let mut log = Vec::with_capacity(if p.write_log { p.count } else { 0 });
    let mut failures = 0usize;
    for index in 0..p.count {
        let (a, b, contact) = sample_approaching_pair(&mut rng, &p.spec, p.velocity_scale);
        let out = resolve_collision(&a, &b, &contact, &p.spec)?;
        let r = out.invariant_residuals;
        for (w, x) in worst.iter_mut().zip(r) {
            *w = w.max(x);
        }
        failures += usize::from(!p.tolerances.admits(&r));
        if p.write_log {
            log.push((index, out.impulse.norm(), r));
        }
    }
    if p.write_log {
        ctx.write_with("collisions.csv", |w| {
            writeln!(w, "index,jn,psi1,psi2,psi3,psi4").map_err(io_err)?;
            for (i, jn, r) in &log {
                writeln!(w, "{i},{jn},{},{},{},{}", r[0], r[1], r[2], r[3]).map_err(io_err)?;
            }
            Ok(())
        })?;
    }
    let passed = failures == 0;
    ctx.write_json(
        "collide_report.json",
        &json!({
            "mode": "collide",
            "seed": seed,
            "count": p.count,
            "max_residuals": { "psi1": worst[0], "psi2": worst[1], "psi3": worst[2], "psi4": worst[3] },
            "tolerances": p.tolerances,
            "failures": failures,
            "passed": passed,
        }),
    )?;
    Ok((
        passed,
        format!(
            "{} collisions, max residuals psi2 {:.2e} psi3 {:.2e} psi4 {:.2e}, {failures} over tolerance",
            p.count, worst[1], worst[2], worst[3]
        ),
    ))
}

pub(crate) fn dsmc(ctx: &mut Context) -> ModeResult {
    let p: DsmcParams = ctx.config.params()?;
    p.equilibrium.validate()?;
    nonzero("count", p.count)?;
    positive("dt", p.dt)?;
    let seed = ctx.seed()?;
    let spec = p.equilibrium.spec;
    let mut ens = sample_equilibrium(&p.equilibrium, p.count, seed)?;
    let cells = match p.cells {
        Some(dims) => CellGrid::new(dims)?,
        None => CellGrid::automatic(&ens.box_size(), p.count, spec.bounding_diameter(), 10),
    };
    ens.set_cells(cells)?;
    let mut sim = Dsmc::from_ensemble(&ens, &spec, seed)?;
    if p.log_collisions {
        sim.enable_log();
    }
    let start = sim.totals();
    let mut rows = Vec::with_capacity(p.steps);
    let mut worst = [0.0f64; 4];
    let (mut collisions, mut undershoots, mut failures) = (0usize, 0usize, 0usize);
    for step in 1..=p.steps {
        let report = sim.step(p.dt)?;
        let totals = sim.totals();
        collisions += report.collisions;
        undershoots += report.majorant_undershoots;
        for (w, x) in worst.iter_mut().zip(report.max_residuals) {
            *w = w.max(x);
        }
        failures += usize::from(!p.tolerances.admits(&report.max_residuals));
        rows.push((step, report, totals));
    }
    ctx.write_with("dsmc.csv", |w| {
        writeln!(
            w,
            "step,t,candidates,collisions,majorant_undershoots,psi1,psi2,psi3,psi4,momx,momy,momz,energy"
        )
        .map_err(io_err)?;
        for (step, r, t) in &rows {
            let m = t.momentum;
            writeln!(
                w,
                "{step},{},{},{},{},{},{},{},{},{},{},{},{}",
                *step as f64 * p.dt,
                r.candidates,
                r.collisions,
                r.majorant_undershoots,
                r.max_residuals[0],
                r.max_residuals[1],
                r.max_residuals[2],
                r.max_residuals[3],
                m.x,
                m.y,
                m.z,
                t.energy
            )
            .map_err(io_err)?;
        }
        Ok(())
    })?;
    if p.log_collisions {
        let log = sim.take_log();
        ctx.write_with("collisions.csv", |w| {
            writeln!(w, "{}", CollisionRecord::CSV_HEADER).map_err(io_err)?;
            for r in &log {
                writeln!(w, "{}", r.csv_row()).map_err(io_err)?;
            }
            Ok(())
        })?;
    }
    if p.write_ensemble {
        let final_ens = sim.to_ensemble()?;
        ctx.write_with("ensemble.csv", |w| final_ens.write_csv(w))?;
    }
    let end = sim.totals();
    let momentum_drift = (end.momentum - start.momentum).norm() / start.momentum_scale.max(f64::MIN_POSITIVE);
    let energy_drift = (end.energy - start.energy).abs() / start.energy;
    let passed = failures == 0;
    ctx.write_json(
        "dsmc_report.json",
        &json!({
            "mode": "dsmc",
            "seed": seed,
            "count": p.count,
            "cells": cells.dims,
            "steps": p.steps,
            "dt": p.dt,
            "collisions": collisions,
            "majorant_undershoots": undershoots,
            "max_collision_residuals": worst,
            "momentum_drift": momentum_drift,
            "energy_drift": energy_drift,
            "steps_over_tolerance": failures,
            "passed": passed,
        }),
    )?;
    Ok((
        passed,
        format!(
            "{} steps, {collisions} collisions, energy drift {energy_drift:.2e}, max psi4 {:.2e}",
            p.steps, worst[3]
        ),
    ))
}

/// Smooth random tilt away from the z axis built from a few periodic modes.
fn perturbed_director(grid: nematikin::PeriodicGrid, amplitude: f64, seed: u64) -> nematikin::Result<DirectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<bool> = (0..3).map(|a| grid.is_active(a)).collect();
    let modes: Vec<([f64; 3], f64, f64)> = (0..6)
        .map(|_| {
            let k = std::array::from_fn(|a| if active[a] { f64::from(rng.random_range(-2i32..=2)) } else { 0.0 });
            (k, rng.random::<f64>() * TAU, rng.random::<f64>() * 2.0 - 1.0)
        })
        .collect();
    let extent = grid.extent();
    let phase = |x: &Vec3, k: &[f64; 3], p: f64| TAU * (0..3).map(|a| k[a] * x[a] / extent[a]).sum::<f64>() + p;
    DirectorField::from_fn(grid, |x| {
        let mut tilt = 0.0;
        let mut azimuth = 0.0;
        for (i, (k, p, w)) in modes.iter().enumerate() {
            let s = phase(&x, k, *p).sin();
            if i % 2 == 0 {
                tilt += w * s;
            } else {
                azimuth += TAU * w * s;
            }
        }
        let theta = amplitude * tilt / 3.0;
        Vec3::new(theta.sin() * azimuth.cos(), theta.sin() * azimuth.sin(), theta.cos())
    })
}

pub(crate) fn relax_director(ctx: &mut Context) -> ModeResult {
    let p: RelaxParams = ctx.config.params()?;
    positive("p_k", p.p_k)?;
    positive("lambda1", p.lambda1)?;
    if let Some(step) = p.step {
        positive("step", step)?;
    }
    let initial = match &p.initial {
        InitialDirector::Helix { turns } => {
            let grid = p.grid.build()?;
            DirectorField::helix(grid, TAU * f64::from(*turns) / grid.extent()[0])?
        }
        InitialDirector::Perturbed { amplitude } => {
            let grid = p.grid.build()?;
            perturbed_director(grid, *amplitude, ctx.seed()?)?
        }
        InitialDirector::File { path } => {
            let file = std::fs::File::open(path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            DirectorField::read(std::io::BufReader::new(file))?
        }
    };
    let p_k = vec![p.p_k; initial.grid().len()];
    let stable = stable_relaxation_step(&initial, &p_k, p.lambda1);
    let step = p.step.unwrap_or(stable);
    let relaxed = director::relax_director(&initial, &p_k, p.lambda1, step, p.iterations)?;
    ctx.write_with("director_initial.grid", |w| initial.write(w))?;
    ctx.write_with("director_final.grid", |w| relaxed.field.write(w))?;
    ctx.write_with("energies.csv", |w| {
        writeln!(w, "iteration,energy").map_err(io_err)?;
        for (i, e) in relaxed.energies.iter().enumerate() {
            writeln!(w, "{i},{e}").map_err(io_err)?;
        }
        Ok(())
    })?;
    let e = &relaxed.energies;
    let monotone = e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    let norm_dev = relaxed.field.max_norm_deviation();
    let passed = monotone && norm_dev <= 1e-12;
    ctx.write_json(
        "relax_report.json",
        &json!({
            "mode": "relax-director",
            "iterations": p.iterations,
            "step": step,
            "stable_step": stable,
            "initial_energy": e[0],
            "final_energy": e[e.len() - 1],
            "monotone": monotone,
            "max_norm_deviation": norm_dev,
            "passed": passed,
        }),
    )?;
    Ok((
        passed,
        format!("energy {:.6e} -> {:.6e} over {} iterations", e[0], e[e.len() - 1], p.iterations),
    ))
}

pub(crate) fn solve(ctx: &mut Context) -> ModeResult {
    let p: SolveParams = ctx.config.params()?;
    p.solver.validate()?;
    if p.snapshot_every == Some(0) {
        return Err(RunError::config("params.snapshot_every", "must be at least 1"));
    }
    let state = match &p.initial_state {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|source| RunError::Io { path: path.clone(), source })?;
            FluidField::read(std::io::BufReader::new(file))?
        }
        None => p.preset.build(p.grid.build()?, &p.solver.spec)?,
    };
    ctx.write_with("state_initial.grid", |w| state.write(w))?;
    let mut solver = Solver::new(state, p.solver)?;
    while solver.step_toward_end()?.is_some() {
        if solver.steps() >= p.max_steps && solver.time() < p.solver.t_end {
            return Err(Error::StateInvariantViolated(format!(
                "t_end {} not reached within {} steps (t = {})",
                p.solver.t_end,
                p.max_steps,
                solver.time()
            ))
            .into());
        }
        if let Some(every) = p.snapshot_every {
            if solver.steps() % every == 0 {
                let snapshot = solver.state();
                ctx.write_with(&format!("snapshots/step_{:06}.grid", solver.steps()), |w| snapshot.write(w))?;
            }
        }
    }
    let rows = solver.diagnostics();
    ctx.write_with("diagnostics.csv", |w| DiagnosticsRow::write_csv(rows, w))?;
    let final_state = solver.state();
    ctx.write_with("state_final.grid", |w| final_state.write(w))?;
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let mass_drift = ((last.mass - first.mass) / first.mass).abs();
    let energy_drift = ((last.energy - first.energy) / first.energy).abs();
    let momentum_change = Vec3::new(last.momx - first.momx, last.momy - first.momy, last.momz - first.momz).norm();
    let numax = rows.iter().map(|r| r.numax_dev).fold(0.0, f64::max);
    let passed = mass_drift <= p.mass_tolerance && numax <= 1e-12;
    ctx.write_json(
        "solve_report.json",
        &json!({
            "mode": "solve",
            "preset": p.initial_state.as_ref().map_or(p.preset.name().to_string(), |f| f.display().to_string()),
            "steps": solver.steps(),
            "time": solver.time(),
            "mass_drift": mass_drift,
            "momentum_change": momentum_change,
            "energy_drift": energy_drift,
            "max_norm_deviation": numax,
            "passed": passed,
        }),
    )?;
    Ok((
        passed,
        format!(
            "{} steps to t = {:.6}, mass drift {mass_drift:.2e}, energy drift {energy_drift:.2e}",
            solver.steps(),
            solver.time()
        ),
    ))
}
