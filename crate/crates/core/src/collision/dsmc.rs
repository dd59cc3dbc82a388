//! Cell-based direct simulation Monte Carlo with a no-time-counter collision scheme.
//!
//! Collision partners are drawn from the same cell. For a candidate pair the relative
//! placement is sampled on the excluded-volume surface: a direction `u` is drawn
//! uniformly and the partner is placed at `q_i + t u` with `t` the touching distance
//! along `u`. Parametrising the surface by direction gives the surface element
//! `t² / (k·u) dΩ`, so the pair rate is the average of
//! `(𝔤·k)⁺ · 4π t² / (k·u)` divided by the cell volume.

use super::{contact_geometry, relative_contact_velocity, resolve_kinematics, InvariantTotals};
use crate::equilibrium::{CellGrid, Ensemble};
use crate::rigidbody::{torque_free_step, Kinematics};
use crate::{Error, MoleculeSpec, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

const BISECTION_STEPS: usize = 64;

/// One accepted collision, as written to the optional collision log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionRecord {
    pub step: u64,
    pub cell: usize,
    pub i: usize,
    pub j: usize,
    /// Normal impulse magnitude.
    pub jn: f64,
    /// Relative kinetic-energy change of the pair.
    pub dpsi4_rel: f64,
}

impl CollisionRecord {
    pub const CSV_HEADER: &'static str = "step,cell,i,j,Jn,dpsi4_rel";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.cell, self.i, self.j, self.jn, self.dpsi4_rel
        )
    }
}

/// Summary of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DsmcStepReport {
    pub candidates: usize,
    pub collisions: usize,
    /// Candidates whose rate exceeded the majorant (the majorant is raised afterwards).
    pub majorant_undershoots: usize,
    /// Largest per-collision relative residuals of `[ψ1, ψ2, ψ3, ψ4]`.
    pub max_residuals: [f64; 4],
}

/// DSMC state: lab-frame kinematics of every molecule in a periodic box.
#[derive(Debug, Clone)]
pub struct Dsmc {
    spec: MoleculeSpec,
    box_size: Vec3,
    cells: CellGrid,
    bodies: Vec<Kinematics>,
    seed: u64,
    step: u64,
    majorant_boost: f64,
    log: Option<Vec<CollisionRecord>>,
}

struct CellResult {
    bodies: Vec<Kinematics>,
    report: DsmcStepReport,
    records: Vec<CollisionRecord>,
}

impl Dsmc {
    pub fn new(bodies: Vec<Kinematics>, box_size: Vec3, cells: CellGrid, spec: MoleculeSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let cells = CellGrid::new(cells.dims)?;
        let edge = cells.edge(&box_size);
        let diameter = spec.bounding_diameter();
        let min_edge = edge.min();
        if min_edge < diameter {
            return Err(Error::CellTooSmall {
                cell_edge: min_edge,
                diameter,
            });
        }
        let mut s = Self {
            spec,
            box_size,
            cells,
            bodies,
            seed,
            step: 0,
            majorant_boost: 1.0,
            log: None,
        };
        s.wrap();
        Ok(s)
    }

    pub fn from_ensemble(ens: &Ensemble, spec: &MoleculeSpec, seed: u64) -> Result<Self> {
        let bodies = ens
            .particles
            .iter()
            .map(|p| p.kinematics(spec))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bodies, ens.box_size(), ens.cells(), *spec, seed)
    }

    pub fn to_ensemble(&self) -> Result<Ensemble> {
        let particles = self.bodies.iter().map(|k| k.to_state(&self.spec)).collect();
        Ensemble::new(particles, self.box_size, self.cells)
    }

    pub fn bodies(&self) -> &[Kinematics] {
        &self.bodies
    }

    pub fn spec(&self) -> &MoleculeSpec {
        &self.spec
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn box_size(&self) -> Vec3 {
        self.box_size
    }

    pub fn enable_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn take_log(&mut self) -> Vec<CollisionRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Total momentum and kinetic energy.
    pub fn totals(&self) -> InvariantTotals {
        InvariantTotals::of(self.bodies.iter(), &self.spec)
    }

    fn wrap(&mut self) {
        let l = self.box_size;
        for b in &mut self.bodies {
            for a in 0..3 {
                let mut x = b.q[a].rem_euclid(l[a]);
                if x >= l[a] {
                    x = 0.0;
                }
                b.q[a] = x;
            }
        }
    }

    /// Free flight followed by collisions, over a time step `dt`.
    pub fn step(&mut self, dt: f64) -> Result<DsmcStepReport> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::invalid("dt", "must be finite and non-negative"));
        }
        let spec = self.spec;
        if dt > 0.0 {
            self.bodies.par_iter_mut().for_each(|b| {
                b.q += b.v * dt;
                let (r, w) = torque_free_step(&b.rotation, &b.omega, &spec, dt);
                b.rotation = r;
                b.omega = w;
            });
            self.wrap();
        }
        let members = self.cell_members();
        let volume = self.cells.edge(&self.box_size).product();
        let step = self.step;
        let seed = self.seed;
        let boost = self.majorant_boost;
        let logging = self.log.is_some();
        let results: Vec<CellResult> = members
            .par_iter()
            .enumerate()
            .map(|(cell, idx)| {
                let mut rng = cell_rng(seed, step, cell);
                let bodies: Vec<Kinematics> = idx.iter().map(|&i| self.bodies[i]).collect();
                collide_cell(bodies, idx, cell, step, &spec, volume, dt, boost, logging, &mut rng)
            })
            .collect();
        let mut report = DsmcStepReport::default();
        for (idx, res) in members.iter().zip(results) {
            for (&i, b) in idx.iter().zip(res.bodies) {
                self.bodies[i] = b;
            }
            report.candidates += res.report.candidates;
            report.collisions += res.report.collisions;
            report.majorant_undershoots += res.report.majorant_undershoots;
            for k in 0..4 {
                report.max_residuals[k] = report.max_residuals[k].max(res.report.max_residuals[k]);
            }
            if let Some(log) = self.log.as_mut() {
                log.extend(res.records);
            }
        }
        if report.majorant_undershoots > 0 {
            self.majorant_boost *= 2.0;
        }
        self.step += 1;
        Ok(report)
    }

    fn cell_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells.len()];
        for (i, b) in self.bodies.iter().enumerate() {
            out[self.cells.cell_of(&b.q, &self.box_size)].push(i);
        }
        out
    }
}

fn cell_rng(seed: u64, step: u64, cell: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(cell as u64);
    rng
}

fn random_direction<R: Rng>(rng: &mut R) -> Vec3 {
    let z = 1.0 - 2.0 * rng.random::<f64>();
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Distance along `u` at which the partner's surface first touches body `a`.
fn touching_distance(a: &Kinematics, b: &Kinematics, u: &Vec3, spec: &MoleculeSpec) -> f64 {
    let (na, nb) = (a.director(), b.director());
    let mut lo = 0.0;
    let mut hi = spec.bounding_diameter();
    if spec.rod_halflength == 0.0 {
        return 2.0 * spec.rod_radius;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let c = contact_geometry(&a.q, &na, &(a.q + mid * u), &nb, spec);
        if c.depth < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[allow(clippy::too_many_arguments)]
fn collide_cell(
    mut bodies: Vec<Kinematics>,
    idx: &[usize],
    cell: usize,
    step: u64,
    spec: &MoleculeSpec,
    volume: f64,
    dt: f64,
    boost: f64,
    logging: bool,
    rng: &mut ChaCha8Rng,
) -> CellResult {
    let mut report = DsmcStepReport::default();
    let mut records = Vec::new();
    let n = bodies.len();
    if n < 2 || dt == 0.0 {
        return CellResult { bodies, report, records };
    }
    let reach = spec.rod_halflength + spec.rod_radius;
    let r_max = 2.0 * reach;
    let weight_max = 4.0 * PI * r_max.powi(3) / (2.0 * spec.rod_radius);
    let mean_v = bodies.iter().map(|b| b.v).sum::<Vec3>() / n as f64;
    let v_dev = bodies.iter().map(|b| (b.v - mean_v).norm()).fold(0.0, f64::max);
    let w_max = bodies.iter().map(|b| b.omega.norm()).fold(0.0, f64::max);
    let mut f_max = boost * (2.0 * v_dev + 2.0 * w_max * reach) * weight_max;
    if f_max <= 0.0 {
        return CellResult { bodies, report, records };
    }
    let expected = 0.5 * (n * (n - 1)) as f64 * f_max * dt / volume;
    let candidates = (expected + rng.random::<f64>()).floor() as usize;
    report.candidates = candidates;
    for _ in 0..candidates {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let u = random_direction(rng);
        let t = touching_distance(&bodies[i], &bodies[j], &u, spec);
        let a = bodies[i];
        let b = Kinematics { q: a.q + t * u, ..bodies[j] };
        let contact = contact_geometry(&a.q, &a.director(), &b.q, &b.director(), spec);
        let ku = contact.k.dot(&u);
        let gn = relative_contact_velocity(&a, &b, &contact).dot(&contact.k);
        let accept_draw = rng.random::<f64>();
        if gn <= 0.0 || ku <= 0.0 {
            continue;
        }
        let rate = gn * 4.0 * PI * t * t / ku;
        if rate > f_max {
            report.majorant_undershoots += 1;
            f_max = rate;
        }
        if accept_draw * f_max >= rate {
            continue;
        }
        let Ok((pa, pb, jn)) = resolve_kinematics(&a, &b, &contact, spec) else {
            continue;
        };
        let before = InvariantTotals::of([&a, &b], spec);
        let after = InvariantTotals::of([&pa, &pb], spec);
        let res = before.residuals(&after);
        for (m, r) in report.max_residuals.iter_mut().zip(res) {
            *m = m.max(r);
        }
        bodies[i].v = pa.v;
        bodies[i].omega = pa.omega;
        bodies[j].v = pb.v;
        bodies[j].omega = pb.omega;
        report.collisions += 1;
        if logging {
            records.push(CollisionRecord {
                step,
                cell,
                i: idx[i],
                j: idx[j],
                jn,
                dpsi4_rel: res[3],
            });
        }
    }
    CellResult { bodies, report, records }
}

/// Advances an ensemble by one DSMC step.
///
/// `step_index` selects the random substreams, so repeated calls should pass
/// successive indices.
pub fn dsmc_step(
    ens: &mut Ensemble,
    dt: f64,
    spec: &MoleculeSpec,
    seed: u64,
    step_index: u64,
) -> Result<DsmcStepReport> {
    let mut sim = Dsmc::from_ensemble(ens, spec, seed)?;
    sim.step = step_index;
    let report = sim.step(dt)?;
    if dt > 0.0 || report.collisions > 0 {
        *ens = sim.to_ensemble()?;
    }
    Ok(report)
}
