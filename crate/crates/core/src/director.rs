//! Nematic director fields on periodic grids.
//!
//! The elastic energy is the one-constant Oseen–Frank form with a pressure-dependent
//! Frank constant, `ρψ_OF = p_K (λ1/2) |∇ν|²`. Gradients use the convention
//! `G[(p, k)] = ∂_k ν_p` and second-order central differences with periodic wrap.

use crate::grid::{GridTable, PeriodicGrid};
use crate::{Error, Mat3, Result, Vec3};
use rayon::prelude::*;
use std::io::{BufRead, Write};

/// Tolerance on `| |ν| − 1 |` for a valid director field.
pub const UNIT_TOL: f64 = 1e-12;

/// Unit-vector field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    grid: PeriodicGrid,
    nu: Vec<Vec3>,
}

impl DirectorField {
    pub fn new(grid: PeriodicGrid, nu: Vec<Vec3>) -> Result<Self> {
        if nu.len() != grid.len() {
            return Err(Error::invalid(
                "director.nu",
                format!("expected {} nodes, got {}", grid.len(), nu.len()),
            ));
        }
        let field = Self { grid, nu };
        field.validate()?;
        Ok(field)
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        let nu = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::new(grid, nu)
    }

    pub fn uniform(grid: PeriodicGrid, direction: Vec3) -> Result<Self> {
        Self::new(grid, vec![direction; grid.len()])
    }

    /// `ν = (cos kx, sin kx, 0)`.
    pub fn helix(grid: PeriodicGrid, wavenumber: f64) -> Result<Self> {
        Self::from_fn(grid, |x| {
            let (s, c) = (wavenumber * x.x).sin_cos();
            Vec3::new(c, s, 0.0)
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.nu
    }

    pub fn into_inner(self) -> Vec<Vec3> {
        self.nu
    }

    /// Fails with the first node whose length deviates from one by more than [`UNIT_TOL`].
    pub fn validate(&self) -> Result<()> {
        match self
            .nu
            .iter()
            .position(|n| !(n.norm() - 1.0).abs().le(&UNIT_TOL))
        {
            Some(node) => Err(Error::NotUnitField {
                node,
                norm: self.nu[node].norm(),
            }),
            None => Ok(()),
        }
    }

    pub fn max_norm_deviation(&self) -> f64 {
        max_norm_deviation(&self.nu)
    }

    /// Rescales every node to unit length. Zero vectors are rejected.
    pub fn renormalize(&mut self) -> Result<()> {
        renormalize(&mut self.nu)
    }

    pub fn gradient(&self, idx: usize) -> Mat3 {
        self.grid.grad_vector(&self.nu, idx)
    }

    pub fn gradients(&self) -> Vec<Mat3> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.gradient(i))
            .collect()
    }

    pub fn to_table(&self) -> GridTable {
        GridTable {
            grid: self.grid,
            columns: ["nx", "ny", "nz"].map(String::from).to_vec(),
            rows: self.nu.iter().map(|n| vec![n.x, n.y, n.z]).collect(),
        }
    }

    pub fn from_table(table: &GridTable) -> Result<Self> {
        let cols = [table.column("nx")?, table.column("ny")?, table.column("nz")?];
        let nu = table
            .rows
            .iter()
            .map(|r| Vec3::new(r[cols[0]], r[cols[1]], r[cols[2]]))
            .collect();
        Self::new(table.grid, nu)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        self.to_table().write(w)
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        Self::from_table(&GridTable::read(r)?)
    }
}

pub(crate) fn max_norm_deviation(nu: &[Vec3]) -> f64 {
    nu.iter().map(|n| (n.norm() - 1.0).abs()).fold(0.0, f64::max)
}

pub(crate) fn renormalize(nu: &mut [Vec3]) -> Result<()> {
    for (node, n) in nu.iter_mut().enumerate() {
        let norm = n.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotUnitField { node, norm });
        }
        *n /= norm;
    }
    Ok(())
}

fn check_pressure(field: &DirectorField, p_k: &[f64]) -> Result<()> {
    if p_k.len() != field.grid.len() {
        return Err(Error::invalid(
            "p_K",
            format!("expected {} nodes, got {}", field.grid.len(), p_k.len()),
        ));
    }
    field.validate()
}

/// Pointwise `p_K (λ1/2) Σ_{k,p} (∂_k ν_p)²`.
pub fn oseen_frank_density(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<Vec<f64>> {
    check_pressure(field, p_k)?;
    Ok((0..field.grid.len())
        .into_par_iter()
        .map(|i| p_k[i] * 0.5 * lambda1 * field.gradient(i).norm_squared())
        .collect())
}

/// `(λ1/2) tr[G ℙ Gᵀ]` for an arbitrary (density-weighted) pressure tensor `ℙ`.
pub fn trace_form_density(grad: &Mat3, pressure: &Mat3, lambda1: f64) -> f64 {
    0.5 * lambda1 * (grad * pressure * grad.transpose()).trace()
}

/// Momentum flux of the closed system, `p_K (λ1/2) Gᵀ G`, at every node.
pub fn nematic_stress(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<Vec<Mat3>> {
    check_pressure(field, p_k)?;
    Ok((0..field.grid.len())
        .into_par_iter()
        .map(|i| nematic_stress_at(&field.gradient(i), p_k[i], lambda1))
        .collect())
}

#[inline]
pub fn nematic_stress_at(grad: &Mat3, p_k: f64, lambda1: f64) -> Mat3 {
    grad.tr_mul(grad) * (0.5 * lambda1 * p_k)
}

/// `(∂ψ/∂∇ν)ᵀ ∇ν` for a general energy.
pub fn nematic_stress_general<E: DirectorEnergy + ?Sized>(energy: &E, nu: &Vec3, grad: &Mat3) -> Mat3 {
    energy.d_grad(nu, grad).tr_mul(grad)
}

/// Couple stress `M_ij = −ε_iqp ν_q (p_K λ1 ∂_j ν_p)`: column `j` is `−ν × (p_K λ1 ∂_j ν)`.
pub fn couple_stress_nematic(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<Vec<Mat3>> {
    check_pressure(field, p_k)?;
    Ok((0..field.grid.len())
        .into_par_iter()
        .map(|i| {
            let d = field.gradient(i) * (p_k[i] * lambda1);
            couple_from_derivative(&field.nu[i], &d)
        })
        .collect())
}

/// Couple stress `−ν × D` column by column for `D = ∂ψ/∂∇ν`.
pub fn couple_from_derivative(nu: &Vec3, d: &Mat3) -> Mat3 {
    let mut m = Mat3::zeros();
    for j in 0..3 {
        m.set_column(j, &(-nu.cross(&d.column(j).into_owned())));
    }
    m
}

/// Energy density, stresses and total energy of a director field.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `ρψ_OF` per node.
    pub density: Vec<f64>,
    /// `∫ ρψ_OF` over the grid.
    pub total: f64,
    pub stress: Vec<Mat3>,
    pub couple: Vec<Mat3>,
}

pub fn energy_report(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<EnergyReport> {
    let density = oseen_frank_density(field, p_k, lambda1)?;
    let vol = field.grid.cell_volume();
    let total = crate::parallel::sum_by(density.len(), |i| density[i]) * vol;
    Ok(EnergyReport {
        total,
        stress: nematic_stress(field, p_k, lambda1)?,
        couple: couple_stress_nematic(field, p_k, lambda1)?,
        density,
    })
}

/// `∫ p_K (λ1/2)|∇ν|²` with central-difference gradients.
pub fn total_energy(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<f64> {
    Ok(energy_report(field, p_k, lambda1)?.total)
}

/// Derivative of [`total_energy`] with respect to each node value (no unit constraint).
pub fn total_energy_gradient(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<Vec<Vec3>> {
    check_pressure(field, p_k)?;
    let g = &field.grid;
    let grads = field.gradients();
    let vol = g.cell_volume();
    Ok((0..g.len())
        .into_par_iter()
        .map(|j| {
            let mut out = Vec3::zeros();
            for a in g.active_axes() {
                let m = g.neighbor(j, a, -1);
                let p = g.neighbor(j, a, 1);
                let dm = grads[m].column(a) * p_k[m];
                let dp = grads[p].column(a) * p_k[p];
                out += (dm - dp) * (lambda1 / (2.0 * g.spacing[a]));
            }
            out * vol
        })
        .collect())
}

/// Compact-stencil divergence `∇·(p_K (λ1/2) ∇ν)` using face pressures
/// `p_{i+½} = (p_i + p_{i+1})/2`.
pub fn director_molecular_field(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<Vec<Vec3>> {
    check_pressure(field, p_k)?;
    Ok(molecular_field_raw(&field.grid, &field.nu, p_k, lambda1))
}

pub(crate) fn molecular_field_raw(g: &PeriodicGrid, nu: &[Vec3], p_k: &[f64], lambda1: f64) -> Vec<Vec3> {
    (0..g.len())
        .into_par_iter()
        .map(|i| molecular_field_at(g, nu, p_k, lambda1, i))
        .collect()
}

#[inline]
pub(crate) fn molecular_field_at(g: &PeriodicGrid, nu: &[Vec3], p_k: &[f64], lambda1: f64, i: usize) -> Vec3 {
    let mut h = Vec3::zeros();
    for a in g.active_axes() {
        let p = g.neighbor(i, a, 1);
        let m = g.neighbor(i, a, -1);
        let pp = 0.5 * (p_k[i] + p_k[p]);
        let pm = 0.5 * (p_k[i] + p_k[m]);
        h += ((nu[p] - nu[i]) * pp - (nu[i] - nu[m]) * pm) / (g.spacing[a] * g.spacing[a]);
    }
    h * (0.5 * lambda1)
}

/// Energy consistent with [`director_molecular_field`]:
/// `Σ_faces p_{i+½} (λ1/2) |ν_{i+1} − ν_i|²/h² · cell volume`.
pub fn compact_energy(field: &DirectorField, p_k: &[f64], lambda1: f64) -> Result<f64> {
    check_pressure(field, p_k)?;
    Ok(compact_energy_raw(&field.grid, &field.nu, p_k, lambda1))
}

pub(crate) fn compact_energy_raw(g: &PeriodicGrid, nu: &[Vec3], p_k: &[f64], lambda1: f64) -> f64 {
    let sum = crate::parallel::sum_by(g.len(), |i| {
        g.active_axes()
            .map(|a| {
                let p = g.neighbor(i, a, 1);
                0.5 * (p_k[i] + p_k[p]) * (nu[p] - nu[i]).norm_squared() / (g.spacing[a] * g.spacing[a])
            })
            .sum::<f64>()
    });
    sum * 0.5 * lambda1 * g.cell_volume()
}

/// Largest pseudo-time step for which [`relax_director`] decreases [`compact_energy`].
pub fn stable_relaxation_step(field: &DirectorField, p_k: &[f64], lambda1: f64) -> f64 {
    let p_max = p_k.iter().copied().fold(0.0, f64::max);
    let d = field.grid.dimension().max(1) as f64;
    let h = field.grid.min_spacing();
    if p_max <= 0.0 || !h.is_finite() {
        return f64::INFINITY;
    }
    0.5 * h * h / (d * lambda1 * p_max)
}

/// Outcome of a director relaxation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub field: DirectorField,
    /// Compact energy before the first step and after every step.
    pub energies: Vec<f64>,
}

/// Projected gradient flow `ν ← (ν + s P⊥ h)/|·|` towards a harmonic map.
pub fn relax_director(
    field: &DirectorField,
    p_k: &[f64],
    lambda1: f64,
    step: f64,
    iterations: usize,
) -> Result<Relaxation> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("relax.step", "must be positive"));
    }
    let mut current = field.clone();
    let mut energies = vec![compact_energy(&current, p_k, lambda1)?];
    for _ in 0..iterations {
        let h = molecular_field_raw(&current.grid, &current.nu, p_k, lambda1);
        current
            .nu
            .par_iter_mut()
            .zip(h.par_iter())
            .for_each(|(n, h)| {
                let tangential = h - *n * n.dot(h);
                *n += tangential * step;
            });
        current.renormalize()?;
        energies.push(compact_energy(&current, p_k, lambda1)?);
    }
    Ok(Relaxation {
        field: current,
        energies,
    })
}

/// Finite-difference step used by the default derivatives of [`DirectorEnergy`].
pub const FD_STEP: f64 = 1e-6;

/// A director energy density `ψ(ν, ∇ν)`.
///
/// Derivatives default to central finite differences with step [`FD_STEP`].
pub trait DirectorEnergy {
    fn value(&self, nu: &Vec3, grad: &Mat3) -> f64;

    fn d_nu(&self, nu: &Vec3, grad: &Mat3) -> Vec3 {
        Vec3::from_fn(|p, _| {
            let mut plus = *nu;
            let mut minus = *nu;
            plus[p] += FD_STEP;
            minus[p] -= FD_STEP;
            (self.value(&plus, grad) - self.value(&minus, grad)) / (2.0 * FD_STEP)
        })
    }

    /// `D[(p, k)] = ∂ψ/∂(∂_k ν_p)`.
    fn d_grad(&self, nu: &Vec3, grad: &Mat3) -> Mat3 {
        Mat3::from_fn(|p, k| {
            let mut plus = *grad;
            let mut minus = *grad;
            plus[(p, k)] += FD_STEP;
            minus[(p, k)] -= FD_STEP;
            (self.value(nu, &plus) - self.value(nu, &minus)) / (2.0 * FD_STEP)
        })
    }
}

/// `(κ/2)|∇ν|²`; with `κ = p_K λ1` this is the Oseen–Frank density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneConstant {
    pub stiffness: f64,
}

impl DirectorEnergy for OneConstant {
    fn value(&self, _nu: &Vec3, grad: &Mat3) -> f64 {
        0.5 * self.stiffness * grad.norm_squared()
    }

    fn d_nu(&self, _nu: &Vec3, _grad: &Mat3) -> Vec3 {
        Vec3::zeros()
    }

    fn d_grad(&self, _nu: &Vec3, grad: &Mat3) -> Mat3 {
        grad * self.stiffness
    }
}

/// `c |∇ν|⁴`, derivatives by finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticGradient {
    pub c: f64,
}

impl DirectorEnergy for QuarticGradient {
    fn value(&self, _nu: &Vec3, grad: &Mat3) -> f64 {
        self.c * grad.norm_squared().powi(2)
    }
}

/// `ν · a` for a fixed vector `a`; not rotationally invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoupling {
    pub a: Vec3,
}

impl DirectorEnergy for LinearCoupling {
    fn value(&self, nu: &Vec3, _grad: &Mat3) -> f64 {
        nu.dot(&self.a)
    }

    fn d_nu(&self, _nu: &Vec3, _grad: &Mat3) -> Vec3 {
        self.a
    }

    fn d_grad(&self, _nu: &Vec3, _grad: &Mat3) -> Mat3 {
        Mat3::zeros()
    }
}

/// `ε_iqp [ν_q ∂ψ/∂ν_p + ∂_kν_q ∂ψ/∂(∂_kν_p) + ∂_qν_k ∂ψ/∂(∂_pν_k)]`, which
/// vanishes for rotationally invariant energies.
pub fn ericksen_identity_residual<E: DirectorEnergy + ?Sized>(energy: &E, nu: &Vec3, grad: &Mat3) -> Vec3 {
    let dn = energy.d_nu(nu, grad);
    let d = energy.d_grad(nu, grad);
    let mut r = nu.cross(&dn);
    for k in 0..3 {
        r += grad.column(k).cross(&d.column(k));
    }
    r + axial(&grad.tr_mul(&d))
}

/// `ε_iqp A_qp`.
fn axial(a: &Mat3) -> Vec3 {
    Vec3::new(
        a[(1, 2)] - a[(2, 1)],
        a[(2, 0)] - a[(0, 2)],
        a[(0, 1)] - a[(1, 0)],
    )
}
