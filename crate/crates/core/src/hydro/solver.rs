use super::diagnostics::{rate_of_work_residual_with, residual_norm, DiagnosticsRow, StressModel};
use super::{closure_coefficient, ElasticForm, FluidField, Scheme, SolverConfig};
use crate::director::renormalize;
use crate::grid::PeriodicGrid;
use crate::parallel::chunked_sum;
use crate::{Error, Mat3, Result, Vec3};
use rayon::prelude::*;

/// Number of conserved scalar components: `ρ, ρv, E`.
const NC: usize = 5;
type Cons = [f64; NC];

/// Conservative state `(ρ, ρv, E, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Conserved {
    pub rho: Vec<f64>,
    pub mom: Vec<Vec3>,
    pub energy: Vec<f64>,
    pub nu: Vec<Vec3>,
}

impl Conserved {
    pub fn from_field(f: &FluidField) -> Self {
        Self {
            rho: f.rho.clone(),
            mom: f.rho.iter().zip(&f.v).map(|(r, v)| v * *r).collect(),
            energy: (0..f.len())
                .map(|i| f.rho[i] * (f.psi0[i] + 0.5 * f.v[i].norm_squared()))
                .collect(),
            nu: f.nu.clone(),
        }
    }

    /// Primitive variables without validation.
    pub fn to_field(&self, grid: PeriodicGrid) -> FluidField {
        let v: Vec<Vec3> = self.mom.iter().zip(&self.rho).map(|(m, r)| m / *r).collect();
        let psi0 = (0..self.rho.len())
            .map(|i| self.energy[i] / self.rho[i] - 0.5 * v[i].norm_squared())
            .collect();
        FluidField {
            grid,
            rho: self.rho.clone(),
            v,
            nu: self.nu.clone(),
            psi0,
        }
    }

    #[inline]
    fn cons(&self, i: usize) -> Cons {
        let m = self.mom[i];
        [self.rho[i], m.x, m.y, m.z, self.energy[i]]
    }

    /// `a·self + b·(other + dt·rates)`.
    fn combine(&self, a: f64, b: f64, other: &Self, dt: f64, rates: &Rates) -> Self {
        let n = self.rho.len();
        let mut out = Self {
            rho: vec![0.0; n],
            mom: vec![Vec3::zeros(); n],
            energy: vec![0.0; n],
            nu: vec![Vec3::zeros(); n],
        };
        out.rho
            .par_iter_mut()
            .zip(out.mom.par_iter_mut())
            .zip(out.energy.par_iter_mut().zip(out.nu.par_iter_mut()))
            .enumerate()
            .for_each(|(i, ((r, m), (e, nu)))| {
                *r = a * self.rho[i] + b * (other.rho[i] + dt * rates.rho[i]);
                *m = self.mom[i] * a + (other.mom[i] + rates.momentum[i] * dt) * b;
                *e = a * self.energy[i] + b * (other.energy[i] + dt * rates.energy[i]);
                *nu = self.nu[i] * a + (other.nu[i] + rates.nu[i] * dt) * b;
            });
        out
    }

    fn check_density(&self) -> Result<()> {
        match self.rho.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            Some(cell) => Err(Error::NonPositiveDensity {
                cell,
                value: self.rho[cell],
            }),
            None => Ok(()),
        }
    }
}

/// Periodic neighbour tables for the active axes.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub axes: Vec<usize>,
    pub inv_h: [f64; 3],
    pub plus: [Vec<usize>; 3],
    pub minus: [Vec<usize>; 3],
    pub plus2: [Vec<usize>; 3],
    pub minus2: [Vec<usize>; 3],
}

impl Stencil {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let table = |axis: usize, off: isize| -> Vec<usize> {
            if grid.is_active(axis) {
                (0..grid.len()).map(|i| grid.neighbor(i, axis, off)).collect()
            } else {
                Vec::new()
            }
        };
        Self {
            axes: grid.active_axes().collect(),
            inv_h: grid.spacing.map(|h| 1.0 / h),
            plus: [0, 1, 2].map(|a| table(a, 1)),
            minus: [0, 1, 2].map(|a| table(a, -1)),
            plus2: [0, 1, 2].map(|a| table(a, 2)),
            minus2: [0, 1, 2].map(|a| table(a, -2)),
        }
    }

    /// `G[(p, k)] = ∂_k u_p` by central differences.
    #[inline]
    pub fn grad(&self, u: &[Vec3], i: usize) -> Mat3 {
        let mut g = Mat3::zeros();
        for &a in &self.axes {
            let d = (u[self.plus[a][i]] - u[self.minus[a][i]]) * (0.5 * self.inv_h[a]);
            g.set_column(a, &d);
        }
        g
    }

    #[inline]
    pub fn grad_scalar(&self, f: &[f64], i: usize) -> Vec3 {
        let mut g = Vec3::zeros();
        for &a in &self.axes {
            g[a] = (f[self.plus[a][i]] - f[self.minus[a][i]]) * (0.5 * self.inv_h[a]);
        }
        g
    }
}

/// Pointwise primitive quantities shared by the flux and director terms.
#[derive(Debug, Clone, Copy)]
struct Node {
    v: Vec3,
    p: f64,
    grad: Mat3,
    c: f64,
}

/// Time derivatives of the conservative variables and the director, with the
/// recovered Lagrange multiplier `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub rho: Vec<f64>,
    pub momentum: Vec<Vec3>,
    pub energy: Vec<f64>,
    pub nu: Vec<Vec3>,
    pub tau: Vec<f64>,
}

fn nodes(cons: &Conserved, stencil: &Stencil, config: &SolverConfig) -> Result<Vec<Node>> {
    cons.check_density()?;
    let a = closure_coefficient(&config.spec);
    let lambda1 = config.spec.lambda1;
    let nodes: Vec<Node> = (0..cons.rho.len())
        .into_par_iter()
        .map(|i| {
            let rho = cons.rho[i];
            let v = cons.mom[i] / rho;
            let psi0 = cons.energy[i] / rho - 0.5 * v.norm_squared();
            let grad = stencil.grad(&cons.nu, i);
            let c = effective_sound_speed(a, psi0, 1.0 + 0.5 * lambda1 * grad.norm_squared());
            Node {
                v,
                p: a * rho * psi0,
                grad,
                c,
            }
        })
        .collect();
    if let Some(i) = nodes.iter().position(|n| !(n.p.is_finite() && n.p > 0.0)) {
        return Err(Error::StateInvariantViolated(format!(
            "internal energy at node {i} is not positive (p_K = {})",
            nodes[i].p
        )));
    }
    Ok(nodes)
}

/// Upper bound on the signal speed when the nematic stress multiplies the isotropic
/// pressure by `stiffening = 1 + (λ1/2)|∇ν|²`: acoustic waves of the stiffened
/// pressure plus the director-advection wave `c² = p_K λ1 |∇ν|²/ρ`.
#[inline]
fn effective_sound_speed(a: f64, psi0: f64, stiffening: f64) -> f64 {
    (a * psi0 * (stiffening * (1.0 + stiffening * a) + 2.0 * (stiffening - 1.0))).sqrt()
}

/// Physical flux along `axis`.
#[inline]
fn node_flux(u: &Cons, node: &Node, axis: usize, lambda1: f64) -> Cons {
    let g = &node.grad;
    let ga = g.column(axis);
    let nem = 0.5 * lambda1 * node.p;
    let mut s = Vec3::new(
        nem * ga.dot(&g.column(0)),
        nem * ga.dot(&g.column(1)),
        nem * ga.dot(&g.column(2)),
    );
    s[axis] += node.p;
    let va = node.v[axis];
    [
        u[1 + axis],
        u[1] * va + s.x,
        u[2] * va + s.y,
        u[3] * va + s.z,
        u[4] * va + s.dot(&node.v),
    ]
}

fn evaluate(cons: &Conserved, stencil: &Stencil, config: &SolverConfig) -> Result<Rates> {
    let nodes = nodes(cons, stencil, config)?;
    let n = nodes.len();
    let lambda1 = config.spec.lambda1;
    let eps4 = config.artificial_viscosity;

    let mut div = vec![[0.0; NC]; n];
    for &a in &stencil.axes {
        let (plus, minus) = (&stencil.plus[a], &stencil.minus[a]);
        let (plus2, inv_h) = (&stencil.plus2[a], stencil.inv_h[a]);
        let flux: Vec<Cons> = (0..n)
            .into_par_iter()
            .map(|i| node_flux(&cons.cons(i), &nodes[i], a, lambda1))
            .collect();
        let speed = |i: usize| nodes[i].v[a].abs() + nodes[i].c;
        let faces: Vec<Cons> = (0..n)
            .into_par_iter()
            .map(|i| {
                let p = plus[i];
                let (fl, fr) = (&flux[i], &flux[p]);
                let (ul, ur) = (cons.cons(i), cons.cons(p));
                let s = speed(i).max(speed(p));
                let mut out = [0.0; NC];
                match config.scheme {
                    Scheme::RusanovFv => {
                        for c in 0..NC {
                            out[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * s * (ur[c] - ul[c]);
                        }
                    }
                    Scheme::CentralMol => {
                        let (upp, um) = (cons.cons(plus2[i]), cons.cons(minus[i]));
                        for c in 0..NC {
                            let d3 = (upp[c] - um[c]) - 3.0 * (ur[c] - ul[c]);
                            out[c] = 0.5 * (fl[c] + fr[c]) + eps4 * s * d3;
                        }
                    }
                }
                out
            })
            .collect();
        div.par_iter_mut().enumerate().for_each(|(i, d)| {
            let (fp, fm) = (&faces[i], &faces[minus[i]]);
            for c in 0..NC {
                d[c] += (fp[c] - fm[c]) * inv_h;
            }
        });
    }

    let p_k: Vec<f64> = nodes.iter().map(|n| n.p).collect();
    let sign = config.director_sign.factor();
    let nu = &cons.nu;
    let director: Vec<(Vec3, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut h = Vec3::zeros();
            let mut adv = Vec3::zeros();
            let mut av = Vec3::zeros();
            let speed = nodes[i].v.norm();
            for &a in &stencil.axes {
                let (p, m) = (stencil.plus[a][i], stencil.minus[a][i]);
                let ih = stencil.inv_h[a];
                let (pp, pm) = match config.elastic_form {
                    ElasticForm::Divergence => (0.5 * (p_k[i] + p_k[p]), 0.5 * (p_k[i] + p_k[m])),
                    ElasticForm::Factored => (p_k[i], p_k[i]),
                };
                h += ((nu[p] - nu[i]) * pp - (nu[i] - nu[m]) * pm) * (ih * ih);
                adv += (nu[p] - nu[m]) * (0.5 * ih * nodes[i].v[a]);
                if eps4 > 0.0 && speed > 0.0 {
                    let (p2, m2) = (stencil.plus2[a][i], stencil.minus2[a][i]);
                    let second = |a: usize, b: usize, c: usize| (nu[a] - nu[b]) - (nu[b] - nu[c]);
                    let d4 = second(p2, p, i) - second(p, i, m) * 2.0 + second(i, m, m2);
                    av += d4 * (eps4 * speed * ih);
                }
            }
            let raw = h * (0.5 * lambda1 * sign);
            let unit = nu[i].normalize();
            let w = raw / (lambda1 * cons.rho[i]) - adv - av;
            (w - unit * unit.dot(&w), -unit.dot(&raw))
        })
        .collect();

    Ok(Rates {
        rho: div.iter().map(|d| -d[0]).collect(),
        momentum: div.iter().map(|d| -Vec3::new(d[1], d[2], d[3])).collect(),
        energy: div.iter().map(|d| -d[4]).collect(),
        nu: director.iter().map(|d| d.0).collect(),
        tau: director.iter().map(|d| d.1).collect(),
    })
}

/// Right-hand side of the semi-discrete system at `state`.
///
/// `rho`, `momentum` and `energy` are the rates of `ρ`, `ρv` and `ρ(ψ0 + ½|v|²)`.
pub fn rhs(state: &FluidField, config: &SolverConfig) -> Result<Rates> {
    state.validate().map_err(as_invariant)?;
    config.validate()?;
    evaluate(&Conserved::from_field(state), &Stencil::new(&state.grid), config)
}

fn as_invariant(e: Error) -> Error {
    match e {
        Error::StateInvariantViolated(_) => e,
        other => Error::StateInvariantViolated(other.to_string()),
    }
}

fn stability_limit(cons: &Conserved, stencil: &Stencil, config: &SolverConfig) -> Result<f64> {
    let nodes = nodes(cons, stencil, config)?;
    let uniform_director = cons.nu.iter().all(|n| *n == cons.nu[0]);
    let sum_inv_h: f64 = stencil.axes.iter().map(|&a| stencil.inv_h[a]).sum();
    let sum_inv_h2: f64 = stencil.axes.iter().map(|&a| stencil.inv_h[a].powi(2)).sum();
    let rates = nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| {
            let hyper: f64 = stencil
                .axes
                .iter()
                .map(|&a| (node.v[a].abs() + node.c) * stencil.inv_h[a])
                .sum();
            // explicit diffusion of the director with coefficient p_K / (2ρ)
            let parabolic = if uniform_director {
                0.0
            } else {
                node.p / cons.rho[i] * sum_inv_h2
            };
            let viscous = 8.0 * config.artificial_viscosity * node.v.norm() * sum_inv_h;
            hyper.max(parabolic).max(viscous)
        })
        .reduce(|| 0.0, f64::max);
    Ok(if rates > 0.0 {
        config.cfl / rates
    } else {
        f64::INFINITY
    })
}

/// Largest admissible step: `cfl` times the minimum of the hyperbolic limit
/// `h/(|v| + c)` and, for non-uniform directors, the diffusive limit of the director.
pub fn stable_dt(state: &FluidField, config: &SolverConfig) -> Result<f64> {
    config.validate()?;
    stability_limit(&Conserved::from_field(state), &Stencil::new(&state.grid), config)
}

/// One SSP-RK2 step. Returns the new conservative state and `τ` at the old state.
fn advance(cons: &Conserved, stencil: &Stencil, config: &SolverConfig, dt: f64) -> Result<(Conserved, Vec<f64>)> {
    let l0 = evaluate(cons, stencil, config)?;
    let u1 = cons.combine(0.0, 1.0, cons, dt, &l0);
    u1.check_density()?;
    let l1 = evaluate(&u1, stencil, config)?;
    let mut u2 = cons.combine(0.5, 0.5, &u1, dt, &l1);
    u2.check_density()?;
    renormalize(&mut u2.nu)?;
    Ok((u2, l0.tau))
}

/// Result of a single [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: FluidField,
    pub dt: f64,
    pub tau: Vec<f64>,
}

/// Advances `state` by one step of `config.dt`, or of the stability limit when no
/// step is given.
pub fn step(state: &FluidField, config: &SolverConfig) -> Result<StepOutcome> {
    config.validate()?;
    state.validate()?;
    let stencil = Stencil::new(&state.grid);
    let cons = Conserved::from_field(state);
    let dt = choose_dt(&cons, &stencil, config, None)?;
    let (next, tau) = advance(&cons, &stencil, config, dt)?;
    let next = next.to_field(state.grid);
    next.validate()?;
    Ok(StepOutcome { state: next, dt, tau })
}

fn choose_dt(cons: &Conserved, stencil: &Stencil, config: &SolverConfig, remaining: Option<f64>) -> Result<f64> {
    let limit = stability_limit(cons, stencil, config)?;
    let dt = match config.dt {
        Some(dt) if dt > limit * (1.0 + 1e-12) => return Err(Error::CflViolation { dt, limit }),
        Some(dt) => dt,
        None if limit.is_finite() => limit,
        None => return Err(Error::invalid("dt", "state has no finite stability limit; give dt")),
    };
    Ok(match remaining {
        Some(r) if r < dt => r,
        _ => dt,
    })
}

/// Time integrator with diagnostics recorded after every step.
#[derive(Debug, Clone)]
pub struct Solver {
    grid: PeriodicGrid,
    cons: Conserved,
    stencil: Stencil,
    config: SolverConfig,
    time: f64,
    steps: usize,
    rows: Vec<DiagnosticsRow>,
}

impl Solver {
    /// Validates the inputs and records the diagnostics of the initial state.
    pub fn new(state: FluidField, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        state.validate()?;
        let stencil = Stencil::new(&state.grid);
        let cons = Conserved::from_field(&state);
        let tau = evaluate(&cons, &stencil, &config)?.tau;
        let mut s = Self {
            grid: state.grid,
            cons,
            stencil,
            config,
            time: 0.0,
            steps: 0,
            rows: Vec::new(),
        };
        let row = s.row(0.0, &tau);
        s.rows.push(row);
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn state(&self) -> FluidField {
        self.cons.to_field(self.grid)
    }

    /// One row for the initial state and one per accepted step.
    pub fn diagnostics(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn stable_dt(&self) -> Result<f64> {
        stability_limit(&self.cons, &self.stencil, &self.config)
    }

    /// Takes one step of the configured size (or the stability limit).
    pub fn step(&mut self) -> Result<&DiagnosticsRow> {
        let dt = choose_dt(&self.cons, &self.stencil, &self.config, None)?;
        self.step_by(dt)
    }

    fn step_by(&mut self, dt: f64) -> Result<&DiagnosticsRow> {
        let (next, tau) = advance(&self.cons, &self.stencil, &self.config, dt)?;
        let prev = self.cons.to_field(self.grid);
        let next_field = next.to_field(self.grid);
        next_field.validate()?;
        let residual = rate_of_work_residual_with(&prev, &next_field, dt, &self.config.spec, StressModel::Full);
        self.cons = next;
        self.time += dt;
        self.steps += 1;
        let mut row = self.row(residual_norm(&residual), &tau);
        row.t = self.time;
        self.rows.push(row);
        Ok(self.rows.last().expect("row just pushed"))
    }

    /// Takes one step towards `t_end`, shortened to land on it. Returns `None` once
    /// `t_end` has been reached.
    pub fn step_toward_end(&mut self) -> Result<Option<&DiagnosticsRow>> {
        let t_end = self.config.t_end;
        if t_end - self.time <= 1e-12 * t_end.max(1.0) {
            return Ok(None);
        }
        let dt = choose_dt(&self.cons, &self.stencil, &self.config, Some(t_end - self.time))?;
        self.step_by(dt).map(Some)
    }

    /// Steps until `t_end`, shortening the final step to land on it.
    pub fn run(&mut self) -> Result<()> {
        while self.step_toward_end()?.is_some() {}
        Ok(())
    }

    /// Takes exactly `n` steps.
    pub fn run_steps(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }

    fn row(&self, row_residual: f64, tau: &[f64]) -> DiagnosticsRow {
        let c = &self.cons;
        let vol = self.grid.cell_volume();
        let [mass, px, py, pz, energy] = chunked_sum(c.rho.len(), |i| {
            let m = c.mom[i];
            [c.rho[i], m.x, m.y, m.z, c.energy[i]]
        });
        DiagnosticsRow {
            t: self.time,
            mass: mass * vol,
            momx: px * vol,
            momy: py * vol,
            momz: pz * vol,
            energy: energy * vol,
            numax_dev: crate::director::max_norm_deviation(&c.nu),
            row_residual,
            tau_norm: tau.iter().map(|t| t.abs()).fold(0.0, f64::max),
        }
    }
}
