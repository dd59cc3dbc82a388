use super::Ensemble;
use crate::parallel::chunked_sum;
use crate::rigidbody::Kinematics;
use crate::{Error, Mat3, MoleculeSpec, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Resample count used for bootstrap standard errors.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Empirical bracket averages of an ensemble.
///
/// The stream angular velocity is defined through the mean angular momentum,
/// `ω0 = Ī⁻¹ η`, so that `⟨𝕀Ω⟩ = 0` holds exactly and `ψ = ψ0 + ψK`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: f64,
    pub rho: f64,
    pub v0: Vec3,
    pub omega0: Vec3,
    /// `⟨𝕀ω⟩`.
    pub eta: Vec3,
    /// `⟨𝕀⟩`.
    #[serde(with = "mat_rows")]
    pub I_bar: Mat3,
    /// `⟨V⊗V⟩`.
    #[serde(with = "mat_rows")]
    pub P: Mat3,
    /// `⟨V⊗𝕀ω⟩`.
    #[serde(with = "mat_rows")]
    pub M: Mat3,
    /// `⟨v⊗v⟩`.
    #[serde(with = "mat_rows")]
    pub Pi: Mat3,
    /// `⟨v⊗𝕀ω⟩`.
    #[serde(with = "mat_rows")]
    pub Pi_c: Mat3,
    /// Heat flux `½⟨V(m|V|² + Ω·𝕀Ω)⟩`.
    pub Q: Vec3,
    /// `⟨θ⟩`.
    pub theta_bar: f64,
    pub psi0: f64,
    /// `½⟨m|v|² + ω·𝕀ω⟩`.
    pub psi: f64,
    pub psi_K: f64,
    /// `tr(ρ P)`.
    pub p_K: f64,
    /// Axial vector of the antisymmetric part of `nm⟨v⊗v⟩`.
    pub xi: Vec3,
}

mod mat_rows {
    use crate::Mat3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat3, s: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat3, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Ok(Mat3::from_fn(|i, j| rows[i][j]))
    }
}

const FIELDS: usize = 2 + 3 * 3 + 5 * 9 + 3 + 4 + 1 + 3;

impl MomentSet {
    fn to_flat(&self) -> [f64; FIELDS] {
        let mut out = [0.0; FIELDS];
        let mut k = 0;
        let mut push = |xs: &[f64]| {
            out[k..k + xs.len()].copy_from_slice(xs);
            k += xs.len();
        };
        push(&[self.n, self.rho]);
        push(self.v0.as_slice());
        push(self.omega0.as_slice());
        push(self.eta.as_slice());
        for m in [&self.I_bar, &self.P, &self.M, &self.Pi, &self.Pi_c] {
            push(m.as_slice());
        }
        push(self.Q.as_slice());
        push(&[self.theta_bar, self.psi0, self.psi, self.psi_K]);
        push(&[self.p_K]);
        push(self.xi.as_slice());
        out
    }

    fn from_flat(x: &[f64; FIELDS]) -> Self {
        let v = |k: usize| Vec3::from_column_slice(&x[k..k + 3]);
        let m = |k: usize| Mat3::from_column_slice(&x[k..k + 9]);
        Self {
            n: x[0],
            rho: x[1],
            v0: v(2),
            omega0: v(5),
            eta: v(8),
            I_bar: m(11),
            P: m(20),
            M: m(29),
            Pi: m(38),
            Pi_c: m(47),
            Q: v(56),
            theta_bar: x[59],
            psi0: x[60],
            psi: x[61],
            psi_K: x[62],
            p_K: x[63],
            xi: v(64),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("moment set serializes")
    }
}

/// Per-particle quantities needed by the moment sums.
#[derive(Debug, Clone, Copy)]
struct Sample {
    v: Vec3,
    omega: Vec3,
    inertia: Mat3,
}

impl Sample {
    fn new(k: &Kinematics, spec: &MoleculeSpec) -> Self {
        Self {
            v: k.v,
            omega: k.omega,
            inertia: k.lab_inertia(spec),
        }
    }
}

fn first_pass(s: &Sample, m: f64) -> [f64; 16] {
    let mut out = [0.0; 16];
    let l = s.inertia * s.omega;
    out[0..3].copy_from_slice(s.v.as_slice());
    out[3..12].copy_from_slice(s.inertia.as_slice());
    out[12..15].copy_from_slice(l.as_slice());
    out[15] = 0.5 * (m * s.v.norm_squared() + s.omega.dot(&l));
    out
}

fn second_pass(s: &Sample, m: f64, v0: &Vec3, omega0: &Vec3) -> [f64; 49] {
    let mut out = [0.0; 49];
    let big_v = s.v - v0;
    let big_w = s.omega - omega0;
    let l = s.inertia * s.omega;
    let theta = 0.5 * (m * big_v.norm_squared() + big_w.dot(&(s.inertia * big_w)));
    out[0..9].copy_from_slice((big_v * big_v.transpose()).as_slice());
    out[9..18].copy_from_slice((big_v * l.transpose()).as_slice());
    out[18..27].copy_from_slice((s.v * s.v.transpose()).as_slice());
    out[27..36].copy_from_slice((s.v * l.transpose()).as_slice());
    out[36..39].copy_from_slice((big_v * theta).as_slice());
    out[39] = theta;
    let vv = s.v * s.v.transpose();
    // ξ_l = ε_lki v_i v_k
    out[40] = vv[(2, 1)] - vv[(1, 2)];
    out[41] = vv[(0, 2)] - vv[(2, 0)];
    out[42] = vv[(1, 0)] - vv[(0, 1)];
    out
}

fn assemble(
    count: usize,
    volume: f64,
    m: f64,
    sum: impl Fn(Term<'_, 16>) -> [f64; 16],
    sum2: impl Fn(Term<'_, 49>) -> [f64; 49],
    sample: impl Fn(usize) -> Sample + Sync,
) -> Result<MomentSet> {
    if count == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let inv = 1.0 / count as f64;
    let a = sum(&|i| first_pass(&sample(i), m));
    let v0 = Vec3::from_column_slice(&a[0..3]) * inv;
    let i_bar = Mat3::from_column_slice(&a[3..12]) * inv;
    let eta = Vec3::from_column_slice(&a[12..15]) * inv;
    let psi = a[15] * inv;
    let omega0 = i_bar
        .cholesky()
        .map(|c| c.solve(&eta))
        .or_else(|| i_bar.lu().solve(&eta))
        .unwrap_or_else(Vec3::zeros);
    let b = sum2(&|i| second_pass(&sample(i), m, &v0, &omega0));
    let n = count as f64 / volume;
    let rho = m * n;
    let p = Mat3::from_column_slice(&b[0..9]) * inv;
    let theta_bar = b[39] * inv;
    Ok(MomentSet {
        n,
        rho,
        v0,
        omega0,
        eta,
        I_bar: i_bar,
        P: p,
        M: Mat3::from_column_slice(&b[9..18]) * inv,
        Pi: Mat3::from_column_slice(&b[18..27]) * inv,
        Pi_c: Mat3::from_column_slice(&b[27..36]) * inv,
        Q: Vec3::from_column_slice(&b[36..39]) * inv,
        theta_bar,
        psi0: theta_bar,
        psi,
        psi_K: 0.5 * (m * v0.norm_squared() + omega0.dot(&(i_bar * omega0))),
        p_K: rho * p.trace(),
        xi: Vec3::from_column_slice(&b[40..43]) * (inv * n * m),
    })
}

type Term<'a, const N: usize> = &'a (dyn Fn(usize) -> [f64; N] + Sync);

fn parallel_sum<const N: usize>(len: usize) -> impl Fn(Term<'_, N>) -> [f64; N] {
    move |f| chunked_sum(len, f)
}

fn sequential_sum<const N: usize>(len: usize) -> impl Fn(Term<'_, N>) -> [f64; N] {
    move |f| {
        let mut acc = [0.0; N];
        for i in 0..len {
            let x = f(i);
            for k in 0..N {
                acc[k] += x[k];
            }
        }
        acc
    }
}

fn samples_of(ens: &Ensemble, spec: &MoleculeSpec) -> Result<Vec<Sample>> {
    ens.particles
        .par_iter()
        .map(|p| p.kinematics(spec).map(|k| Sample::new(&k, spec)))
        .collect()
}

/// Bracket averages of every moment over the ensemble.
pub fn estimate_moments(ens: &Ensemble, spec: &MoleculeSpec) -> Result<MomentSet> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let samples = samples_of(ens, spec)?;
    moments_of_samples(&samples, ens.volume(), spec.m)
}

/// Bracket averages over explicit lab-frame kinematics occupying `volume`.
pub fn estimate_moments_from_kinematics(
    kin: &[Kinematics],
    volume: f64,
    spec: &MoleculeSpec,
) -> Result<MomentSet> {
    let samples: Vec<Sample> = kin.iter().map(|k| Sample::new(k, spec)).collect();
    moments_of_samples(&samples, volume, spec.m)
}

fn moments_of_samples(samples: &[Sample], volume: f64, m: f64) -> Result<MomentSet> {
    assemble(
        samples.len(),
        volume,
        m,
        parallel_sum::<16>(samples.len()),
        parallel_sum::<49>(samples.len()),
        |i| samples[i],
    )
}

/// Bootstrap standard error of every moment, from `resamples` draws with replacement.
///
/// Resample `r` uses the ChaCha8 stream `r` of `seed`, so the result is independent of
/// the worker count.
pub fn bootstrap_standard_errors(
    ens: &Ensemble,
    spec: &MoleculeSpec,
    resamples: usize,
    seed: u64,
) -> Result<MomentSet> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if resamples < 2 {
        return Err(Error::invalid("resamples", "need at least two"));
    }
    let samples = samples_of(ens, spec)?;
    let n = samples.len();
    let volume = ens.volume();
    let draws: Vec<[f64; FIELDS]> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let picks: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
            assemble(
                n,
                volume,
                spec.m,
                sequential_sum::<16>(n),
                sequential_sum::<49>(n),
                |i| samples[picks[i] as usize],
            )
            .map(|m| m.to_flat())
        })
        .collect::<Result<_>>()?;
    let mut se = [0.0; FIELDS];
    for (k, s) in se.iter_mut().enumerate() {
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / resamples as f64;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
        *s = var.sqrt();
    }
    Ok(MomentSet::from_flat(&se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{sample_equilibrium, CellGrid, EquilibriumParams};
    use crate::rigidbody::EulerAngles;
    use crate::RigidState;
    use approx::assert_relative_eq;

    fn spec() -> MoleculeSpec {
        MoleculeSpec {
            i1: 1.0,
            i2: 1.2,
            i3: 0.5,
            ..MoleculeSpec::default()
        }
    }

    #[test]
    fn single_particle_at_rest_has_only_rotational_energy() {
        let s = spec();
        let st = RigidState::from_velocities(
            Vec3::zeros(),
            EulerAngles::new(0.1, 1.0, 0.3),
            Vec3::zeros(),
            Vec3::new(0.0, 0.0, 2.0),
            &s,
        );
        let e = Ensemble::new(vec![st], Vec3::repeat(1.0), CellGrid::new([1, 1, 1]).unwrap()).unwrap();
        let m = estimate_moments(&e, &s).unwrap();
        assert_eq!(m.P, Mat3::zeros());
        assert_eq!(m.M, Mat3::zeros());
        // A single body's angular velocity is its own stream value, leaving no peculiar part.
        assert!(m.theta_bar.abs() < 1e-14);
        assert_relative_eq!(m.psi_K, m.psi, max_relative = 1e-12);
        assert!(m.psi > 0.0);
    }

    #[test]
    fn empty_ensemble_errors() {
        let e = Ensemble::new(vec![], Vec3::repeat(1.0), CellGrid::new([1, 1, 1]).unwrap()).unwrap();
        assert!(matches!(estimate_moments(&e, &spec()), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn peculiar_means_vanish_and_energy_splits() {
        let mut p = EquilibriumParams::new(2.0, 1.5, spec());
        p.v0 = Vec3::new(0.3, -0.2, 0.1);
        p.omega0 = Vec3::new(0.1, 0.2, -0.3);
        let e = sample_equilibrium(&p, 5000, 11).unwrap();
        let m = estimate_moments(&e, &spec()).unwrap();
        assert!((m.eta - m.I_bar * m.omega0).norm() < 1e-12);
        assert_relative_eq!(m.psi, m.psi0 + m.psi_K, max_relative = 1e-12);
        assert!((m.P - m.P.transpose()).amax() == 0.0);
        assert_eq!(m.xi, Vec3::zeros());
        assert_relative_eq!(m.rho, spec().m * m.n);
        assert_relative_eq!(m.n, 2.0, max_relative = 1e-12);
        assert!(m.P.symmetric_eigenvalues().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn sampled_spin_has_zero_mean_angular_momentum() {
        let p = EquilibriumParams::new(1.0, 1.0, spec());
        let e = sample_equilibrium(&p, 20_000, 5).unwrap();
        let s = spec();
        let kin: Vec<Kinematics> = e.particles.iter().map(|x| x.kinematics(&s).unwrap()).collect();
        let n = kin.len() as f64;
        let l: Vec<Vec3> = kin.iter().map(|k| k.angular_momentum(&s)).collect();
        let mean = l.iter().sum::<Vec3>() / n;
        for a in 0..3 {
            let var = l.iter().map(|x| (x[a] - mean[a]).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean[a].abs() < 3.5 * (var / n).sqrt());
        }
    }

    #[test]
    fn json_uses_symbol_keys() {
        let p = EquilibriumParams::new(1.0, 1.0, spec());
        let e = sample_equilibrium(&p, 100, 2).unwrap();
        let m = estimate_moments(&e, &spec()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        for key in [
            "n", "rho", "v0", "omega0", "eta", "I_bar", "P", "M", "Pi", "Pi_c", "Q", "theta_bar",
            "psi0", "psi", "psi_K", "p_K", "xi",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["P"][0][1], serde_json::json!(m.P[(0, 1)]));
        let back: MomentSet = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn flat_round_trip() {
        let p = EquilibriumParams::new(1.0, 1.0, spec());
        let e = sample_equilibrium(&p, 50, 2).unwrap();
        let m = estimate_moments(&e, &spec()).unwrap();
        assert_eq!(MomentSet::from_flat(&m.to_flat()), m);
    }

    #[test]
    fn bootstrap_error_scales_like_inverse_root_n() {
        let p = EquilibriumParams::new(1.0, 1.0, spec());
        let s = spec();
        let small = sample_equilibrium(&p, 1000, 8).unwrap();
        let large = sample_equilibrium(&p, 16_000, 8).unwrap();
        let a = bootstrap_standard_errors(&small, &s, 100, 1).unwrap();
        let b = bootstrap_standard_errors(&large, &s, 100, 1).unwrap();
        let ratio = a.P[(0, 0)] / b.P[(0, 0)];
        assert!((2.8..5.6).contains(&ratio), "{ratio}");
        // Exact analytic error of the mean of V² entries is sqrt(2) σ² / sqrt(N).
        let sigma2 = p.velocity_variance();
        assert_relative_eq!(b.P[(0, 0)], 2f64.sqrt() * sigma2 / 16_000f64.sqrt(), max_relative = 0.25);
    }
}
