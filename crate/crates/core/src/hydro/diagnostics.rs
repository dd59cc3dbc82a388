use super::solver::Stencil;
use super::{closure_coefficient, total_stress, FluidField};
use crate::{Mat3, MoleculeSpec, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const DIAGNOSTICS_HEADER: &str = "t,mass,momx,momy,momz,energy,numax_dev,row_residual,tau_norm";

/// Global quantities after one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub momx: f64,
    pub momy: f64,
    pub momz: f64,
    /// `∫ρ(ψ0 + ½|v|²)`.
    pub energy: f64,
    /// `max | |ν| − 1 |`.
    pub numax_dev: f64,
    /// RMS of the rate-of-work residual over the step.
    pub row_residual: f64,
    /// `max |τ|`.
    pub tau_norm: f64,
}

impl DiagnosticsRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.mass,
            self.momx,
            self.momy,
            self.momz,
            self.energy,
            self.numax_dev,
            self.row_residual,
            self.tau_norm
        )
    }

    pub fn write_csv<W: Write>(rows: &[Self], mut w: W) -> Result<()> {
        writeln!(w, "{DIAGNOSTICS_HEADER}")?;
        for r in rows {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

/// Stress used when evaluating the rate of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StressModel {
    /// `p_K I + p_K (λ1/2)(∇ν)ᵀ∇ν`.
    #[default]
    Full,
    /// `p_K I` only.
    WithoutNematic,
}

/// `ρ ψ̇0 + S : ∇v` at every node, evaluated on the midpoint of two consecutive states
/// with `ψ̇0 = (ψ0' − ψ0)/dt + v·∇ψ0`. Vanishes for adiabatic evolution up to
/// discretisation error.
pub fn rate_of_work_residual(prev: &FluidField, next: &FluidField, dt: f64, spec: &MoleculeSpec) -> Vec<f64> {
    rate_of_work_residual_with(prev, next, dt, spec, StressModel::Full)
}

pub fn rate_of_work_residual_with(
    prev: &FluidField,
    next: &FluidField,
    dt: f64,
    spec: &MoleculeSpec,
    model: StressModel,
) -> Vec<f64> {
    let grid = &prev.grid;
    let stencil = Stencil::new(grid);
    let a = closure_coefficient(spec);
    let n = grid.len();
    let mid = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect() };
    let rho = mid(&prev.rho, &next.rho);
    let psi = mid(&prev.psi0, &next.psi0);
    let v: Vec<_> = prev.v.iter().zip(&next.v).map(|(p, q)| (p + q) * 0.5).collect();
    let nu: Vec<_> = prev.nu.iter().zip(&next.nu).map(|(p, q)| (p + q) * 0.5).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p_k = a * rho[i] * psi[i];
            let stress = match model {
                StressModel::Full => total_stress(p_k, &stencil.grad(&nu, i), spec.lambda1),
                StressModel::WithoutNematic => Mat3::identity() * p_k,
            };
            let grad_v = stencil.grad(&v, i);
            let psi_dot = (next.psi0[i] - prev.psi0[i]) / dt + v[i].dot(&stencil.grad_scalar(&psi, i));
            rho[i] * psi_dot + stress.component_mul(&grad_v).sum()
        })
        .collect()
}

/// Root-mean-square of a nodal field over the grid.
pub fn residual_norm(field: &[f64]) -> f64 {
    if field.is_empty() {
        return 0.0;
    }
    (crate::parallel::sum_by(field.len(), |i| field[i] * field[i]) / field.len() as f64).sqrt()
}
