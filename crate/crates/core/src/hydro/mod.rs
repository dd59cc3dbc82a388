//! Compressible Leslie–Ericksen continuum on periodic grids.
//!
//! The unknowns are density `ρ`, velocity `v`, director `ν` and internal energy `ψ0`.
//! The kinetic pressure follows from the closure `p_K = A ρ ψ0` with
//! `A = (6/5)(I1 I2 I3)^{1/2}/m`. Mass, momentum and total energy
//! `E = ρ(ψ0 + ½|v|²)` are advanced in conservation form with momentum flux
//! `ρ v⊗v + S` and energy flux `(E + S)·v`, where `S = p_K I + p_K (λ1/2)(∇ν)ᵀ∇ν`.
//!
//! The director obeys `λ1 ρ ν̇ = ±∇·(p_K (λ1/2)∇ν) + τν`. The constraint `|ν| = 1` is
//! enforced by renormalising after every step and `τ` is recovered as the component of
//! the elastic force along `ν`.

mod diagnostics;
mod presets;
mod solver;

pub use diagnostics::{
    rate_of_work_residual, rate_of_work_residual_with, residual_norm, DiagnosticsRow, StressModel,
    DIAGNOSTICS_HEADER,
};
pub use presets::Preset;
pub use solver::{rhs, stable_dt, step, Rates, Solver, StepOutcome};

use crate::director::{max_norm_deviation, DirectorField};
use crate::grid::{GridTable, PeriodicGrid};
use crate::{Error, Mat3, MoleculeSpec, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Spatial discretisation of the conservative fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// First-order finite volumes with the local Lax–Friedrichs (Rusanov) flux.
    #[default]
    RusanovFv,
    /// Second-order central fluxes with fourth-difference artificial dissipation.
    CentralMol,
}

impl Scheme {
    pub fn formal_order(self) -> f64 {
        match self {
            Scheme::RusanovFv => 1.0,
            Scheme::CentralMol => 2.0,
        }
    }
}

/// Sign of the elastic term in the director equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectorSign {
    /// `λ1 ρ ν̇ = −∇·(p_K (λ1/2)∇ν) + τν`, as written in the closed system. Anti-diffusive.
    Paper,
    /// `λ1 ρ ν̇ = +∇·(p_K (λ1/2)∇ν) + τν`: harmonic-map relaxation.
    #[default]
    Dissipative,
}

impl DirectorSign {
    pub(crate) fn factor(self) -> f64 {
        match self {
            DirectorSign::Paper => -1.0,
            DirectorSign::Dissipative => 1.0,
        }
    }
}

/// Placement of `p_K` in the elastic term of the director equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticForm {
    /// `∇·(p_K (λ1/2)∇ν)`. Linearised about a director gradient `|∇ν|` in a moving
    /// fluid, the system stays hyperbolic only while `(λ1/2)|∇ν|² < 1`.
    #[default]
    Divergence,
    /// `p_K (λ1/2) Δν`.
    Factored,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_viscosity() -> f64 {
    0.03
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Fixed time step. When absent the step is `cfl` times the stability limit.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub director_sign: DirectorSign,
    #[serde(default)]
    pub elastic_form: ElasticForm,
    /// Coefficient of the fourth-difference dissipation (conserved variables for
    /// `central_mol`, director advection for both schemes).
    #[serde(default = "default_viscosity")]
    pub artificial_viscosity: f64,
    #[serde(default)]
    pub spec: MoleculeSpec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 1.0,
            cfl: default_cfl(),
            scheme: Scheme::default(),
            director_sign: DirectorSign::default(),
            elastic_form: ElasticForm::default(),
            artificial_viscosity: default_viscosity(),
            spec: MoleculeSpec::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.spec.lambda1.is_finite() && self.spec.lambda1 > 0.0) {
            return Err(Error::invalid("spec.lambda1", "must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::invalid("dt", "must be positive"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid("cfl", "must lie in (0, 1]"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "must be non-negative"));
        }
        if !(self.artificial_viscosity.is_finite() && self.artificial_viscosity >= 0.0) {
            return Err(Error::invalid("artificial_viscosity", "must be non-negative"));
        }
        Ok(())
    }
}

/// Closure coefficient `A = (6/5)(I1 I2 I3)^{1/2}/m` in `p_K = A ρ ψ0`.
pub fn closure_coefficient(spec: &MoleculeSpec) -> f64 {
    1.2 * spec.inertia_root_product() / spec.m
}

/// Acoustic speed of the linearised `(ρ, v, ψ0)` system about a uniform state:
/// `c² = ∂p/∂ρ|ψ0 + (p/ρ²) ∂p/∂ψ0 = A(1 + A) ψ0`.
pub fn sound_speed_oracle(rho0: f64, psi0: f64, spec: &MoleculeSpec) -> Result<f64> {
    if !(rho0 > 0.0 && psi0 > 0.0) {
        return Err(Error::invalid("base state", "ρ and ψ0 must be positive"));
    }
    let a = closure_coefficient(spec);
    Ok((a * (1.0 + a) * psi0).sqrt())
}

/// Primitive continuum state.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidField {
    pub grid: PeriodicGrid,
    pub rho: Vec<f64>,
    pub v: Vec<Vec3>,
    pub nu: Vec<Vec3>,
    pub psi0: Vec<f64>,
}

impl FluidField {
    pub fn new(grid: PeriodicGrid, rho: Vec<f64>, v: Vec<Vec3>, nu: Vec<Vec3>, psi0: Vec<f64>) -> Result<Self> {
        let s = Self { grid, rho, v, nu, psi0 };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(grid: PeriodicGrid, rho: f64, v: Vec3, nu: Vec3, psi0: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![rho; n], vec![v; n], vec![nu; n], vec![psi0; n])
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if [self.rho.len(), self.v.len(), self.nu.len(), self.psi0.len()] != [n; 4] {
            return Err(Error::StateInvariantViolated(format!("every field needs {n} nodes")));
        }
        if let Some(i) = self.rho.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::NonPositiveDensity { cell: i, value: self.rho[i] });
        }
        if let Some(i) = self.psi0.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::StateInvariantViolated(format!(
                "internal energy {} at node {i} is not positive",
                self.psi0[i]
            )));
        }
        if let Some(i) = self.v.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::StateInvariantViolated(format!("non-finite velocity at node {i}")));
        }
        DirectorField::new(self.grid, self.nu.clone()).map(|_| ())
    }

    pub fn director(&self) -> Result<DirectorField> {
        DirectorField::new(self.grid, self.nu.clone())
    }

    /// `p_K = (6/5)(ρ/m)(I1 I2 I3)^{1/2} ψ0` at every node.
    pub fn kinetic_pressure(&self, spec: &MoleculeSpec) -> Vec<f64> {
        closure_pressure(&self.rho, &self.psi0, spec)
    }

    pub fn max_norm_deviation(&self) -> f64 {
        max_norm_deviation(&self.nu)
    }

    /// `∫ρ`, `∫ρv` and `∫ρ(ψ0 + ½|v|²)`.
    pub fn totals(&self) -> (f64, Vec3, f64) {
        let vol = self.grid.cell_volume();
        let [m, px, py, pz, e] = crate::parallel::chunked_sum(self.len(), |i| {
            let r = self.rho[i];
            let v = self.v[i];
            [r, r * v.x, r * v.y, r * v.z, r * (self.psi0[i] + 0.5 * v.norm_squared())]
        });
        (m * vol, Vec3::new(px, py, pz) * vol, e * vol)
    }

    pub const COLUMNS: [&'static str; 8] = ["nx", "ny", "nz", "rho", "vx", "vy", "vz", "psi0"];

    pub fn to_table(&self) -> GridTable {
        GridTable {
            grid: self.grid,
            columns: Self::COLUMNS.map(String::from).to_vec(),
            rows: (0..self.len())
                .map(|i| {
                    let (n, v) = (self.nu[i], self.v[i]);
                    vec![n.x, n.y, n.z, self.rho[i], v.x, v.y, v.z, self.psi0[i]]
                })
                .collect(),
        }
    }

    pub fn from_table(table: &GridTable) -> Result<Self> {
        let c = Self::COLUMNS.map(|name| table.column(name));
        let mut idx = [0usize; 8];
        for (slot, col) in idx.iter_mut().zip(c) {
            *slot = col?;
        }
        let get = |r: &Vec<f64>, k: usize| r[idx[k]];
        let rows = &table.rows;
        Self::new(
            table.grid,
            rows.iter().map(|r| get(r, 3)).collect(),
            rows.iter().map(|r| Vec3::new(get(r, 4), get(r, 5), get(r, 6))).collect(),
            rows.iter().map(|r| Vec3::new(get(r, 0), get(r, 1), get(r, 2))).collect(),
            rows.iter().map(|r| get(r, 7)).collect(),
        )
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        self.to_table().write(w)
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        Self::from_table(&GridTable::read(r)?)
    }
}

/// Pointwise closure `p_K = A ρ ψ0`.
pub fn closure_pressure(rho: &[f64], psi0: &[f64], spec: &MoleculeSpec) -> Vec<f64> {
    let a = closure_coefficient(spec);
    rho.iter().zip(psi0).map(|(r, p)| a * r * p).collect()
}

/// Momentum flux `S = p_K I + p_K (λ1/2) Gᵀ G` without the convective part.
#[inline]
pub fn total_stress(p_k: f64, grad_nu: &Mat3, lambda1: f64) -> Mat3 {
    Mat3::identity() * p_k + crate::director::nematic_stress_at(grad_nu, p_k, lambda1)
}
